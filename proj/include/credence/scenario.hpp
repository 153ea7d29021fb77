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

// Declarative experiment cells loaded from YAML. See scenarios/SCHEMA.md.

#ifndef CREDENCE_SCENARIO_HPP_
#define CREDENCE_SCENARIO_HPP_

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "credence/llm.hpp"
#include "credence/market.hpp"
#include "credence/metrics.hpp"
#include "credence/policy.hpp"

namespace credence {

// Schema violation. what() reads "<file>:<line>:<col>: <field>: <problem>".
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string file, int line, int column, std::string field,
                const std::string& problem);
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

// An expert seat played by a live LLM agent; resolved by `llm-run`.
struct LlmSeat {
  Objective objective = Objective::SelfInterested;
  std::optional<TrainingSource> training;
  std::string training_data;  // path to a history CSV for the training block
};

struct ExpertSeat {
  ExpertPolicyPtr policy;       // null for unresolved LLM seats
  std::optional<LlmSeat> llm;
  std::string label;            // as written in the file, for reports
};

struct Condition {
  std::string name;
  std::vector<ExpertSeat> experts;
  std::vector<ConsumerPolicyPtr> consumers;
  bool has_llm_seats() const;
};

struct OutputSpec {
  std::filesystem::path dir = "out";
  bool csv = true;
  bool json = true;
  bool digests = false;  // newline-delimited per-replicate digests
  SurplusMode surplus = SurplusMode::GroupTotal;
  EfficiencyMode efficiency = EfficiencyMode::RealizedDenominator;
};

struct LlmSettings {
  std::string model;
  RoleFraming framing = RoleFraming::AIAI;
  std::filesystem::path templates = "templates";
  double temperature = 1.0;
  int max_parse_retries = 3;
  int parallel = 4;
  std::filesystem::path transcript = "transcript.ndjson";
};

struct ScenarioSpec {
  std::string name;
  std::filesystem::path source;  // file this scenario came from; empty for strings
  MarketParams params;
  std::vector<Institution> institutions;
  bool transparency = false;
  ObjectiveRegime objective_regime = ObjectiveRegime::FixedSelfInterested;
  std::vector<Condition> conditions;  // at least one
  std::int64_t n_reps = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  OutputSpec output;
  LlmSettings llm;

  // Market for one cell. Throws std::logic_error if an LLM seat is unresolved.
  MarketSetup setup(const Condition& condition, Institution inst) const;
  const Condition& condition(const std::string& name) const;
};

// Relative paths (replay data, outputs, templates) resolve against the
// scenario file's directory.
ScenarioSpec load_scenario(const std::filesystem::path& path);
ScenarioSpec parse_scenario(const std::string& yaml, const std::string& name = "<string>",
                            const std::filesystem::path& base_dir = ".");

std::string to_string(ObjectiveRegime r);
ObjectiveRegime parse_objective_regime(std::string_view s);

}  // namespace credence

#endif  // CREDENCE_SCENARIO_HPP_
