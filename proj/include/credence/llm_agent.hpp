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

// LLM agents playing the market: comprehension gate, price setting and the
// strategy-method treatment decisions, with every turn logged.

#ifndef CREDENCE_LLM_AGENT_HPP_
#define CREDENCE_LLM_AGENT_HPP_

#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "credence/llm.hpp"
#include "credence/llm_client.hpp"
#include "credence/policy.hpp"

namespace credence {

struct ComprehensionQuestion {
  std::string prompt;
  std::vector<std::string> accepted;  // compared case- and space-insensitively
};

struct ComprehensionSet {
  std::vector<ComprehensionQuestion> questions;
  int attempts_allowed = 1;  // per question

  bool accepts(const ComprehensionQuestion& q, std::string_view answer) const;
  // {"attempts_allowed": 2, "questions": [{"prompt": ..., "accepted": [...]}]}
  static ComprehensionSet from_json(std::string_view text);
  static ComprehensionSet load(const std::string& path);
};

struct TranscriptEntry {
  std::string session;
  int turn = 0;
  std::string role;  // system | user | assistant | event
  std::string text;
  std::string parsed;
  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

// Newline-delimited JSON log; appends are serialized.
class TranscriptLog {
 public:
  explicit TranscriptLog(std::ostream* sink = nullptr) : sink_(sink) {}
  void append(const TranscriptEntry& e);
  std::vector<TranscriptEntry> entries() const;

  static std::string to_json_line(const TranscriptEntry& e);
  static std::vector<TranscriptEntry> read(std::istream& in);
  // Assistant replies of one session, in order; feeds a ReplayClient.
  static std::vector<std::string> replies(const std::vector<TranscriptEntry>& entries,
                                          const std::string& session);

 private:
  std::ostream* sink_;
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> entries_;
};

struct AgentConfig {
  MarketParams params;
  Institution institution = Institution::NoInstitution;
  Objective objective = Objective::NoObjective;
  RoleFraming framing = RoleFraming::AIAI;
  std::optional<TrainingSource> training;
  std::string training_data;  // appended to the system text when training is set
  std::string instructions;   // rendered instruction template
  ComprehensionSet comprehension;
  std::string model;
  double temperature = 1.0;
  int max_parse_retries = 3;
  // Ask once per problem type and reuse the answer for every slot.
  bool share_slot_decisions = false;
};

// Bundle builders; exposed so context hygiene can be asserted directly.
PromptBundle comprehension_bundle(const AgentConfig& cfg, bool expert,
                                  const ComprehensionQuestion& q);
PromptBundle price_setting_bundle(const AgentConfig& cfg);
PromptBundle treatment_bundle(const AgentConfig& cfg, const std::vector<ChatMessage>& qa,
                              PricePair prices, std::size_t slot, ProblemType problem);
PromptBundle approach_bundle(const AgentConfig& cfg, const std::vector<ChatMessage>& qa,
                             const std::vector<ExpertOffer>& offers);

struct GateResult {
  bool passed = false;
  std::string reason;
  std::vector<ChatMessage> qa;  // question/answer pairs for later turns
};

struct ExpertRun {
  std::string session;
  bool disqualified = false;
  std::string reason;
  std::optional<ExpertStrategy> strategy;
  int parse_failures = 0;
};

struct ConsumerRun {
  std::string session;
  bool disqualified = false;
  std::string reason;
  std::optional<ApproachDecision> choice;
  int parse_failures = 0;
};

// Throws TransportError when the client gives up; never replaces a
// disqualified agent.
ExpertRun run_llm_expert(ChatClient& client, const AgentConfig& cfg, TranscriptLog& log,
                         const std::string& session);
ConsumerRun run_llm_consumer(ChatClient& client, const AgentConfig& cfg,
                             const std::vector<ExpertOffer>& offers, TranscriptLog& log,
                             const std::string& session);

}  // namespace credence

#endif  // CREDENCE_LLM_AGENT_HPP_
