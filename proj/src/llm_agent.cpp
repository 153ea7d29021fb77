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

#include "credence/llm_agent.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace credence {

using nlohmann::json;

namespace {

std::string normalize(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  while (!out.empty() && (out.back() == '.' || out.back() == '!')) out.pop_back();
  return out;
}

}  // namespace

bool ComprehensionSet::accepts(const ComprehensionQuestion& q, std::string_view answer) const {
  std::string a = normalize(answer);
  for (const std::string& ok : q.accepted)
    if (normalize(ok) == a) return true;
  return false;
}

ComprehensionSet ComprehensionSet::from_json(std::string_view text) {
  json j = json::parse(text);
  ComprehensionSet set;
  set.attempts_allowed = j.value("attempts_allowed", 1);
  if (set.attempts_allowed < 1) throw std::invalid_argument("attempts_allowed must be >= 1");
  for (const auto& q : j.at("questions")) {
    ComprehensionQuestion cq;
    cq.prompt = q.at("prompt").get<std::string>();
    cq.accepted = q.at("accepted").get<std::vector<std::string>>();
    if (cq.accepted.empty())
      throw std::invalid_argument("comprehension question without accepted answers: " +
                                  cq.prompt);
    set.questions.push_back(std::move(cq));
  }
  return set;
}

ComprehensionSet ComprehensionSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

// ---------------------------------------------------------------------------

void TranscriptLog::append(const TranscriptEntry& e) {
  std::lock_guard<std::mutex> lock(mu_);
  entries_.push_back(e);
  if (sink_) *sink_ << to_json_line(e) << '\n' << std::flush;
}

std::vector<TranscriptEntry> TranscriptLog::entries() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_;
}

std::string TranscriptLog::to_json_line(const TranscriptEntry& e) {
  json j = {{"session", e.session},
            {"turn", e.turn},
            {"role", e.role},
            {"text", e.text},
            {"parsed", e.parsed}};
  return j.dump();
}

std::vector<TranscriptEntry> TranscriptLog::read(std::istream& in) {
  std::vector<TranscriptEntry> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw std::runtime_error("transcript line " + std::to_string(n) +
                                                   " is not JSON");
    out.push_back({j.at("session").get<std::string>(), j.at("turn").get<int>(),
                   j.at("role").get<std::string>(), j.at("text").get<std::string>(),
                   j.value("parsed", "")});
  }
  return out;
}

std::vector<std::string> TranscriptLog::replies(const std::vector<TranscriptEntry>& entries,
                                                const std::string& session) {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (e.session == session && e.role == "assistant") out.push_back(e.text);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

PromptBundle base_bundle(const AgentConfig& cfg, bool expert) {
  PromptBundle b;
  b.system_text = cfg.instructions;
  if (cfg.training && !cfg.training_data.empty()) {
    if (!b.system_text.empty()) b.system_text += "\n\n";
    b.system_text += cfg.training_data;
  }
  b.temperature = cfg.temperature;
  b.model_id = cfg.model;
  b.messages.push_back({"user", std::string(role_play_directive(cfg.framing))});
  if (expert)
    b.messages.push_back(
        {"user", build_objective_directive(cfg.objective,
                                           cfg.institution == Institution::Liability)});
  return b;
}

std::string question(std::string_view body, DecisionKind kind) {
  std::string q = consistency_preamble();
  if (!q.empty()) q += "\n\n";
  q += body;
  q += "\n\n";
  q += answer_format_instruction(kind);
  return q;
}

std::string offer_line(const ExpertOffer& o) {
  std::string s = "Player A" + std::to_string(o.expert_index + 1) +
                  ": small=" + std::to_string(o.prices.low) +
                  ", big=" + std::to_string(o.prices.high);
  if (o.delegated) {
    s += " (delegated to an AI agent";
    if (o.disclosed_objective) s += "; objective: " + objective_display(*o.disclosed_objective);
    s += ")";
  }
  return s;
}

}  // namespace

PromptBundle comprehension_bundle(const AgentConfig& cfg, bool expert,
                                  const ComprehensionQuestion& q) {
  PromptBundle b = base_bundle(cfg, expert);
  b.messages.push_back({"user", question(q.prompt, DecisionKind::Comprehension)});
  return b;
}

PromptBundle price_setting_bundle(const AgentConfig& cfg) {
  PromptBundle b = base_bundle(cfg, true);
  b.messages.push_back(
      {"user", question("Set your two prices: the small price, charged for the LCT, and the "
                        "big price, charged for the HCT. Both are whole numbers from " +
                            std::to_string(cfg.params.price_min) + " to " +
                            std::to_string(cfg.params.price_max) +
                            ", and the big price cannot be below the small price.",
                        DecisionKind::PriceSetting)});
  return b;
}

PromptBundle treatment_bundle(const AgentConfig& cfg, const std::vector<ChatMessage>& qa,
                              PricePair prices, std::size_t slot, ProblemType problem) {
  PromptBundle b = base_bundle(cfg, true);
  b.messages.insert(b.messages.end(), qa.begin(), qa.end());
  std::string body = "You set small=" + std::to_string(prices.low) +
                     " and big=" + std::to_string(prices.high) + ". Player B number " +
                     std::to_string(slot + 1) + " approached you and has a " +
                     (problem == ProblemType::Big ? "big" : "small") +
                     " problem. Which treatment do you provide, and do you charge the low "
                     "(small) or the high (big) price?";
  b.messages.push_back({"user", question(body, DecisionKind::TreatmentAndCharge)});
  return b;
}

PromptBundle approach_bundle(const AgentConfig& cfg, const std::vector<ChatMessage>& qa,
                             const std::vector<ExpertOffer>& offers) {
  PromptBundle b = base_bundle(cfg, false);
  b.messages.insert(b.messages.end(), qa.begin(), qa.end());
  std::string body = "These are the prices of all Player A's:\n";
  for (const ExpertOffer& o : offers) body += offer_line(o) + "\n";
  body += "Do you approach one of them, or leave the market and keep your outside option of " +
          cfg.params.outside_option.to_string() + "?";
  b.messages.push_back({"user", question(body, DecisionKind::Approach)});
  return b;
}

// ---------------------------------------------------------------------------

namespace {

class Conversation {
 public:
  Conversation(ChatClient& client, const AgentConfig& cfg, TranscriptLog& log,
               std::string session)
      : client_(client), cfg_(cfg), log_(log), session_(std::move(session)) {}

  void log_system(const std::string& text) { append("system", text, ""); }
  void event(const std::string& text) { append("event", text, ""); }

  // Sends the bundle, re-asking with the parse error on failure.
  ParsedDecision ask(PromptBundle bundle, DecisionKind kind,
                     std::optional<ProblemType> problem, int& failures) {
    for (int attempt = 0;; ++attempt) {
      append("user", bundle.messages.back().content, "");
      ChatResponse r = client_.complete(ChatRequest::from_bundle(bundle));
      ParsedDecision d =
          parse_expert_decision(r.text, kind, cfg_.institution, cfg_.params, problem);
      append("assistant", r.text, describe(d));
      if (!is_failure(d)) return d;
      ++failures;
      if (attempt >= cfg_.max_parse_retries) return d;
      const auto& f = std::get<ParseFailure>(d);
      bundle.messages.push_back({"assistant", r.text});
      bundle.messages.push_back(
          {"user", "Your answer could not be used (" + std::string(to_string(f.kind)) + ": " +
                       f.message + "). " + answer_format_instruction(kind)});
    }
  }

  GateResult gate(bool expert, int& failures) {
    GateResult g;
    for (std::size_t i = 0; i < cfg_.comprehension.questions.size(); ++i) {
      const ComprehensionQuestion& q = cfg_.comprehension.questions[i];
      bool ok = false;
      std::string last;
      for (int a = 0; a < cfg_.comprehension.attempts_allowed && !ok; ++a) {
        ParsedDecision d = ask(comprehension_bundle(cfg_, expert, q),
                               DecisionKind::Comprehension, std::nullopt, failures);
        if (is_failure(d)) continue;
        last = std::get<std::string>(d);
        ok = cfg_.comprehension.accepts(q, last);
      }
      if (!ok) {
        g.reason = "comprehension question " + std::to_string(i + 1) + " failed";
        return g;
      }
      g.qa.push_back({"user", "Comprehension question: " + q.prompt + "\nYour answer: " + last});
    }
    g.passed = true;
    return g;
  }

 private:
  void append(const std::string& role, const std::string& text, const std::string& parsed) {
    log_.append({session_, turn_++, role, text, parsed});
  }

  ChatClient& client_;
  const AgentConfig& cfg_;
  TranscriptLog& log_;
  std::string session_;
  int turn_ = 0;
};

}  // namespace

ExpertRun run_llm_expert(ChatClient& client, const AgentConfig& cfg, TranscriptLog& log,
                         const std::string& session) {
  ExpertRun run;
  run.session = session;
  Conversation conv(client, cfg, log, session);
  conv.log_system(base_bundle(cfg, true).system_text);

  GateResult gate = conv.gate(true, run.parse_failures);
  if (!gate.passed) {
    run.disqualified = true;
    run.reason = gate.reason;
    conv.event("disqualified: " + run.reason);
    return run;
  }

  // Price setting deliberately omits the comprehension Q&A.
  ParsedDecision p = conv.ask(price_setting_bundle(cfg), DecisionKind::PriceSetting,
                              std::nullopt, run.parse_failures);
  if (is_failure(p)) {
    run.disqualified = true;
    run.reason = "price setting: " + std::get<ParseFailure>(p).message;
    conv.event("disqualified: " + run.reason);
    return run;
  }
  ExpertStrategy strategy{std::get<PricePair>(p), {}};

  const auto n = static_cast<std::size_t>(cfg.params.n_consumers);
  std::optional<SlotRule> shared;
  for (std::size_t slot = 0; slot < n; ++slot) {
    if (shared) {
      strategy.slots.push_back(*shared);
      continue;
    }
    SlotRule rule;
    for (ProblemType prob : kProblemTypes) {
      ParsedDecision d =
          conv.ask(treatment_bundle(cfg, gate.qa, strategy.prices, slot, prob),
                   DecisionKind::TreatmentAndCharge, prob, run.parse_failures);
      if (is_failure(d)) {
        run.disqualified = true;
        run.reason = "slot " + std::to_string(slot + 1) + " " +
                     std::string(to_string(prob)) + ": " + std::get<ParseFailure>(d).message;
        conv.event("disqualified: " + run.reason);
        return run;
      }
      (prob == ProblemType::Small ? rule.small : rule.big) = std::get<ExpertAction>(d);
    }
    strategy.slots.push_back(rule);
    if (cfg.share_slot_decisions) shared = rule;
  }
  run.strategy = std::move(strategy);
  conv.event("strategy " + run.strategy->prices.to_string());
  return run;
}

ConsumerRun run_llm_consumer(ChatClient& client, const AgentConfig& cfg,
                             const std::vector<ExpertOffer>& offers, TranscriptLog& log,
                             const std::string& session) {
  ConsumerRun run;
  run.session = session;
  Conversation conv(client, cfg, log, session);
  conv.log_system(base_bundle(cfg, false).system_text);
  GateResult gate = conv.gate(false, run.parse_failures);
  if (!gate.passed) {
    run.disqualified = true;
    run.reason = gate.reason;
    conv.event("disqualified: " + run.reason);
    return run;
  }
  ParsedDecision d = conv.ask(approach_bundle(cfg, gate.qa, offers), DecisionKind::Approach,
                              std::nullopt, run.parse_failures);
  if (is_failure(d)) {
    run.disqualified = true;
    run.reason = "approach: " + std::get<ParseFailure>(d).message;
    conv.event("disqualified: " + run.reason);
    return run;
  }
  run.choice = std::get<ApproachDecision>(d);
  return run;
}

}  // namespace credence
