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

// Resolves the LLM seats of a scenario by playing each one through the
// agent protocol, then runs the resulting markets.

#ifndef CREDENCE_LLM_RUN_HPP_
#define CREDENCE_LLM_RUN_HPP_

#include <mutex>
#include <string>
#include <vector>

#include "credence/llm_agent.hpp"
#include "credence/report.hpp"
#include "credence/session.hpp"

namespace credence {

struct LlmSeatResult {
  std::string session;
  std::string condition;
  Institution institution = Institution::NoInstitution;
  std::size_t seat = 0;
  Objective objective = Objective::SelfInterested;
  ExpertRun run;
};

class LlmSeatDisqualified : public std::runtime_error {
 public:
  explicit LlmSeatDisqualified(const std::string& what) : std::runtime_error(what) {}
};

// Plays LLM seats against one client. Thread-safe.
class LlmSeatPlayer {
 public:
  // Instruction and comprehension files are read from settings.templates.
  LlmSeatPlayer(MarketParams params, LlmSettings settings, ChatClientPtr client,
                TranscriptLog& log);

  AgentConfig config_for(const LlmSeat& seat, Institution inst) const;
  // Throws LlmSeatDisqualified when the agent fails the gate or never
  // produces a usable answer.
  ExpertPolicyPtr play(const LlmSeat& seat, Institution inst, const std::string& session,
                       const std::string& condition = "", std::size_t index = 0);
  std::vector<LlmSeatResult> results() const;

 private:
  MarketParams params_;
  LlmSettings settings_;
  ChatClientPtr client_;
  TranscriptLog& log_;
  std::string instructions_;
  ComprehensionSet comprehension_;
  mutable std::mutex mu_;
  std::vector<LlmSeatResult> results_;
};

// Training block for a seat: history rows read from `seat.training_data`
// (one "Player A3, 4, 8, ..." row per line, optional header paragraph),
// re-encoded with the header for its source.
std::string load_training_block(const LlmSeat& seat, const MarketParams& params);

// Session-service adapter; disqualification becomes a 503.
LlmSeatResolver make_llm_resolver(std::shared_ptr<LlmSeatPlayer> player);

struct LlmScenarioResult {
  ScenarioRun run;
  std::vector<LlmSeatResult> seats;
  // "condition/institution" cells left out because a seat was disqualified.
  std::vector<std::string> skipped;
};

// Plays every LLM seat of every cell (at most settings.parallel at a time),
// then runs the markets. A disqualified seat is never replaced: its cell is
// skipped and listed.
LlmScenarioResult run_llm_scenario(const ScenarioSpec& spec, ChatClientPtr client,
                                   TranscriptLog& log, const RunOverrides& overrides = {});

}  // namespace credence

#endif  // CREDENCE_LLM_RUN_HPP_
