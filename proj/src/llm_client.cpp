// Copyright 2026 The Credence Market Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "credence/llm_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

namespace credence {

using nlohmann::json;

std::string_view to_string(Provider p) {
  return p == Provider::Anthropic ? "anthropic" : "openai";
}

Provider parse_provider(std::string_view s) {
  if (s == "openai" || s == "openai-compatible") return Provider::OpenAICompatible;
  if (s == "anthropic") return Provider::Anthropic;
  throw std::invalid_argument("unknown provider '" + std::string(s) + "'");
}

HttpChatClient::HttpChatClient(Provider provider, std::string base_url, std::string api_key,
                               std::chrono::seconds timeout)
    : provider_(provider), api_key_(std::move(api_key)), timeout_(timeout) {
  std::size_t scheme = base_url.find("://");
  if (scheme == std::string::npos)
    throw std::invalid_argument("base URL needs a scheme: '" + base_url + "'");
  std::size_t path = base_url.find('/', scheme + 3);
  origin_ = base_url.substr(0, path);
  prefix_ = path == std::string::npos ? "" : base_url.substr(path);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

std::string HttpChatClient::name() const {
  return std::string(to_string(provider_)) + "@" + origin_;
}

std::string HttpChatClient::endpoint_path(Provider provider) {
  return provider == Provider::Anthropic ? "/messages" : "/chat/completions";
}

std::string HttpChatClient::request_body(Provider provider, const ChatRequest& r) {
  json messages = json::array();
  if (provider == Provider::OpenAICompatible && !r.system.empty())
    messages.push_back({{"role", "system"}, {"content", r.system}});
  for (const ChatMessage& m : r.messages) {
    // The Messages API wants alternating roles; fold consecutive turns.
    if (provider == Provider::Anthropic && !messages.empty() &&
        messages.back()["role"] == m.role) {
      messages.back()["content"] =
          messages.back()["content"].get<std::string>() + "\n\n" + m.content;
      continue;
    }
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  json body = {{"model", r.model},
               {"messages", messages},
               {"temperature", r.temperature},
               {"max_tokens", r.max_tokens}};
  if (provider == Provider::Anthropic && !r.system.empty()) body["system"] = r.system;
  return body.dump();
}

ChatResponse HttpChatClient::parse_response(Provider provider, const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw TransportError("response is not JSON", 200, false);
  ChatResponse out;
  out.model = j.value("model", "");
  if (provider == Provider::Anthropic) {
    if (!j.contains("content") || !j["content"].is_array())
      throw TransportError("response has no content array", 200, false);
    for (const auto& part : j["content"])
      if (part.value("type", "") == "text") out.text += part.value("text", "");
  } else {
    if (!j.contains("choices") || j["choices"].empty())
      throw TransportError("response has no choices", 200, false);
    const auto& msg = j["choices"][0]["message"];
    if (!msg.contains("content") || !msg["content"].is_string())
      throw TransportError("response message has no text content", 200, false);
    out.text = msg["content"].get<std::string>();
  }
  return out;
}

ChatResponse HttpChatClient::complete(const ChatRequest& request) {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  cli.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (provider_ == Provider::Anthropic) {
    headers.emplace("x-api-key", api_key_);
    headers.emplace("anthropic-version", "2023-06-01");
  } else if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
  }
  auto res = cli.Post(prefix_ + endpoint_path(provider_), headers,
                      request_body(provider_, request), "application/json");
  if (!res)
    throw TransportError("connection to " + origin_ + " failed: " + httplib::to_string(res.error()),
                         0, true);
  if (res->status != 200) {
    bool retry = res->status == 408 || res->status == 429 || res->status >= 500;
    std::string snippet = res->body.substr(0, 300);
    throw TransportError("HTTP " + std::to_string(res->status) + ": " + snippet, res->status,
                         retry);
  }
  return parse_response(provider_, res->body);
}

// ---------------------------------------------------------------------------

StubClient::StubClient(Responder responder) : responder_(std::move(responder)) {}

ChatResponse StubClient::complete(const ChatRequest& request) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    requests_.push_back(request);
  }
  return {responder_(request), "stub"};
}

std::vector<ChatRequest> StubClient::requests() const {
  std::lock_guard<std::mutex> lock(mu_);
  return requests_;
}

ReplayClient::ReplayClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}

ChatResponse ReplayClient::complete(const ChatRequest&) {
  std::lock_guard<std::mutex> lock(mu_);
  if (next_ >= replies_.size())
    throw TransportError("replay transcript exhausted after " + std::to_string(next_) +
                             " replies",
                         0, false);
  return {replies_[next_++], "replay"};
}

std::size_t ReplayClient::remaining() const {
  std::lock_guard<std::mutex> lock(mu_);
  return replies_.size() - next_;
}

// ---------------------------------------------------------------------------

RetryingClient::RetryingClient(ChatClientPtr inner, RetryPolicy policy, Sleeper sleeper)
    : inner_(std::move(inner)), policy_(policy), sleep_(std::move(sleeper)) {
  if (!inner_) throw std::invalid_argument("retrying client needs an inner client");
  if (policy_.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

ChatResponse RetryingClient::complete(const ChatRequest& request) {
  auto delay = policy_.initial_delay;
  for (int attempt = 0;; ++attempt) {
    try {
      return inner_->complete(request);
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= policy_.max_retries) throw;
    }
    sleep_(delay);
    auto next = std::chrono::milliseconds(
        static_cast<std::int64_t>(static_cast<double>(delay.count()) * policy_.backoff));
    delay = std::min(next, policy_.max_delay);
  }
}

ChatClientPtr make_client_from_env(RetryPolicy retry) {
  const char* provider = std::getenv("CREDENCE_LLM_PROVIDER");
  const char* key = std::getenv("CREDENCE_LLM_API_KEY");
  const char* base = std::getenv("CREDENCE_LLM_BASE_URL");
  if (!provider) throw std::runtime_error("CREDENCE_LLM_PROVIDER is not set");
  Provider p = parse_provider(provider);
  std::string url = base ? base
                         : (p == Provider::Anthropic ? "https://api.anthropic.com/v1"
                                                     : "https://api.openai.com/v1");
  if (!key && !base) throw std::runtime_error("CREDENCE_LLM_API_KEY is not set");
  auto http = std::make_shared<HttpChatClient>(p, url, key ? key : "");
  return std::make_shared<RetryingClient>(http, retry);
}

}  // namespace credence
