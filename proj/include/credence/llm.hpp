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

// Prompt assembly, the history-row wire format and the ANSWER trailer
// contract used to drive LLM agents through the market protocol.

#ifndef CREDENCE_LLM_HPP_
#define CREDENCE_LLM_HPP_

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "credence/core.hpp"

namespace credence {

struct ChatMessage {
  std::string role;  // "user" or "assistant"
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// Everything a chat-completion call needs. Identical configuration yields
// byte-identical bundles.
struct PromptBundle {
  std::string system_text;
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
  std::string model_id;
  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

enum class RoleFraming { AIAI, HumanAI };
enum class TrainingSource { AITrained, HumanTrained };

std::string_view to_string(RoleFraming f);
RoleFraming parse_role_framing(std::string_view s);
std::string_view to_string(TrainingSource t);
TrainingSource parse_training_source(std::string_view s);

// ---------------------------------------------------------------------------
// Prompt strings.

// Role-play directive sent as the first user message.
std::string_view role_play_directive(RoleFraming framing);

// The objective sentence alone; empty for NoObjective.
std::string_view objective_sentence(Objective objective);

// Text shown to consumers and experts when an objective is disclosed or
// chosen. The fixed regime shows "maximize Player A's payoff".
std::string_view fixed_objective_label();
std::string objective_display(Objective objective);

// The one-shot reminder frame with the liability clause and the objective
// sentence (absent for NoObjective).
std::string build_objective_directive(Objective objective, bool liable);

// Prepended to every decision question (may be empty).
std::string consistency_preamble();

// ---------------------------------------------------------------------------
// History rows: "Player A3, 4, 8, 3, 7, 4, 8, 11, 11".

inline constexpr std::size_t kHistoryExperts = 4;

struct HistoryRecord {
  std::optional<int> chosen;  // 0-based expert, nullopt for OptOut
  std::array<PricePair, kHistoryExperts> prices;
  friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
};

enum class HistorySource { HumanHuman, AIAI };

class CodecError : public std::runtime_error {
 public:
  CodecError(std::size_t index, const std::string& what)
      : std::runtime_error("record " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// Throws CodecError(index) for labels outside A1..A4 or prices off the grid.
std::string encode_history_row(const HistoryRecord& r, const MarketParams& params = {},
                               std::size_t index = 0);
HistoryRecord parse_history_row(std::string_view line, const MarketParams& params = {},
                                std::size_t index = 0);

// Header paragraph followed by one row per record.
std::string encode_history(const std::vector<HistoryRecord>& records, HistorySource source,
                           const MarketParams& params = {});
// Inverse of encode_history: reads the rows after the header.
std::vector<HistoryRecord> parse_history(std::string_view text,
                                         const MarketParams& params = {});

// ---------------------------------------------------------------------------
// ANSWER trailer.

enum class DecisionKind { PriceSetting, TreatmentAndCharge, Approach, Comprehension };

// Appended to a question: the exact trailer format the reply must end with.
std::string answer_format_instruction(DecisionKind kind);

enum class ParseErrorKind { MissingTrailer, Malformed, OutOfGrid, IllegalAction };
std::string_view to_string(ParseErrorKind k);

struct ParseFailure {
  ParseErrorKind kind;
  std::string message;
};

struct ApproachDecision {
  std::optional<int> expert;  // nullopt: opt out
  friend bool operator==(const ApproachDecision&, const ApproachDecision&) = default;
};

using ParsedDecision =
    std::variant<PricePair, ExpertAction, ApproachDecision, std::string, ParseFailure>;

// The last "ANSWER:" line in `text` is authoritative. Prices are checked
// against the grid; treatment/charge against legal_actions for `problem`
// (required for TreatmentAndCharge); approach indices against n_experts.
ParsedDecision parse_expert_decision(std::string_view text, DecisionKind expected,
                                     Institution inst, const MarketParams& params = {},
                                     std::optional<ProblemType> problem = std::nullopt);

inline bool is_failure(const ParsedDecision& d) {
  return std::holds_alternative<ParseFailure>(d);
}

// JSON-ready rendering of a parse result ("3,7", "LCT/High", "A2", "optout").
std::string describe(const ParsedDecision& d);

// ---------------------------------------------------------------------------
// Instruction templates.

// Replaces {{key}} markers. Unknown markers throw std::invalid_argument so
// that a stale template never reaches a model silently.
std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& values);

// Values for the shipped instruction templates.
std::map<std::string, std::string> template_values(const MarketParams& params,
                                                   Institution inst, RoleFraming framing);

}  // namespace credence

#endif  // CREDENCE_LLM_HPP_
