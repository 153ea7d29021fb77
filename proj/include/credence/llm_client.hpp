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

// Provider-agnostic chat completion: {model, system, messages, temperature}
// -> text. Concrete HTTP adapters, offline stubs and bounded retry.

#ifndef CREDENCE_LLM_CLIENT_HPP_
#define CREDENCE_LLM_CLIENT_HPP_

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "credence/llm.hpp"

namespace credence {

struct ChatRequest {
  std::string model;
  std::string system;
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
  int max_tokens = 1024;

  static ChatRequest from_bundle(const PromptBundle& b, int max_tokens = 1024) {
    return {b.model_id, b.system_text, b.messages, b.temperature, max_tokens};
  }
};

struct ChatResponse {
  std::string text;
  std::string model;
};

// Transport or provider failure. Retryable for connection errors, 408, 429
// and 5xx; other statuses are permanent.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, int status, bool retryable)
      : std::runtime_error(what), status_(status), retryable_(retryable) {}
  int status() const { return status_; }
  bool retryable() const { return retryable_; }

 private:
  int status_;
  bool retryable_;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};
using ChatClientPtr = std::shared_ptr<ChatClient>;

enum class Provider { OpenAICompatible, Anthropic };
std::string_view to_string(Provider p);
Provider parse_provider(std::string_view s);

// HTTP adapter. `base_url` includes the API version path, e.g.
// "https://api.openai.com/v1" or "http://127.0.0.1:8080/v1".
class HttpChatClient : public ChatClient {
 public:
  HttpChatClient(Provider provider, std::string base_url, std::string api_key,
                 std::chrono::seconds timeout = std::chrono::seconds(120));
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override;

  // Request/response codecs, exposed for tests.
  static std::string request_body(Provider provider, const ChatRequest& request);
  static ChatResponse parse_response(Provider provider, const std::string& body);
  static std::string endpoint_path(Provider provider);

 private:
  Provider provider_;
  std::string origin_;  // scheme://host[:port]
  std::string prefix_;  // path before the endpoint
  std::string api_key_;
  std::chrono::seconds timeout_;
};

// Answers with a user-supplied function; records every request.
class StubClient : public ChatClient {
 public:
  using Responder = std::function<std::string(const ChatRequest&)>;
  explicit StubClient(Responder responder);
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "stub"; }
  std::vector<ChatRequest> requests() const;

 private:
  Responder responder_;
  mutable std::mutex mu_;
  std::vector<ChatRequest> requests_;
};

// Returns recorded replies in order; throws TransportError when exhausted.
class ReplayClient : public ChatClient {
 public:
  explicit ReplayClient(std::vector<std::string> replies);
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "replay"; }
  std::size_t remaining() const;

 private:
  std::vector<std::string> replies_;
  mutable std::mutex mu_;
  std::size_t next_ = 0;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_delay{500};
  double backoff = 2.0;
  std::chrono::milliseconds max_delay{8000};
};

class RetryingClient : public ChatClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;
  RetryingClient(ChatClientPtr inner, RetryPolicy policy, Sleeper sleeper = {});
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return inner_->name(); }

 private:
  ChatClientPtr inner_;
  RetryPolicy policy_;
  Sleeper sleep_;
};

// Reads CREDENCE_LLM_PROVIDER (openai | anthropic), CREDENCE_LLM_BASE_URL and
// CREDENCE_LLM_API_KEY, wrapped in a RetryingClient. Throws when the provider
// or key is missing.
ChatClientPtr make_client_from_env(RetryPolicy retry = {});

}  // namespace credence

#endif  // CREDENCE_LLM_CLIENT_HPP_
