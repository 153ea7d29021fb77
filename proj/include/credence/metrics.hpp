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

// Outcome accounting over one or many markets.
//
// MarketTally holds integer sums only, so merging tallies is associative and
// commutative and aggregate numbers do not depend on reduction order.

#ifndef CREDENCE_METRICS_HPP_
#define CREDENCE_METRICS_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include "credence/market.hpp"

namespace credence {

enum class SurplusMode { GroupTotal, PerCapita };
enum class EfficiencyMode {
  RealizedDenominator,  // per-market ratio on realized problems, averaged
  ExpectedDenominator,  // mean income over expected maximum income
};

std::string_view to_string(SurplusMode m);
std::string_view to_string(EfficiencyMode m);
SurplusMode parse_surplus_mode(std::string_view s);
EfficiencyMode parse_efficiency_mode(std::string_view s);

// Per-market efficiency is accumulated in units of 1e-12.
inline constexpr std::int64_t kEfficiencyScale = 1'000'000'000'000;

struct MarketTally {
  std::int64_t markets = 0;
  std::int64_t consumers = 0;
  std::int64_t experts = 0;
  std::int64_t approaches = 0;
  std::int64_t consumer_cents = 0;
  std::int64_t expert_cents = 0;
  std::int64_t realized_max_cents = 0;
  std::int64_t efficiency_units = 0;  // sum of per-market efficiency * scale

  // Served interactions.
  std::int64_t served = 0;
  std::int64_t served_small = 0;
  std::int64_t served_big = 0;
  std::int64_t served_lct = 0;
  std::array<std::int64_t, 3> served_fraud{};  // by FraudKind
  std::int64_t served_any_fraud = 0;

  // Strategy-method slots under each slot's realized problem.
  std::int64_t slots = 0;
  std::int64_t slots_small = 0;
  std::int64_t slots_big = 0;
  std::int64_t slots_lct = 0;
  std::array<std::int64_t, 3> slot_fraud{};
  std::int64_t slot_any_fraud = 0;
  std::int64_t experts_any_fraud = 0;  // at least one fraudulent slot

  // Consumers by the kind of expert approached: "own" (undelegated),
  // an objective name for delegated experts, or "optout".
  std::map<std::string, std::int64_t> attraction;

  void add(const MarketOutcome& outcome, const MarketParams& params);
  void merge(const MarketTally& other);
  friend bool operator==(const MarketTally&, const MarketTally&) = default;
};

struct FraudReport {
  // Per served interaction.
  std::map<FraudKind, double> per_decision;
  // Undertreatment | big, overtreatment | small, overcharging | LCT.
  std::map<FraudKind, double> conditional;
  // Over all strategy-method slots, served or not.
  std::map<FraudKind, double> per_slot;
  double any_per_decision = 0.0;
  double any_per_slot = 0.0;
  double expert_any = 0.0;  // experts defrauding at least one slot
};

struct MetricSet {
  std::int64_t markets = 0;
  SurplusMode surplus_mode = SurplusMode::GroupTotal;
  EfficiencyMode efficiency_mode = EfficiencyMode::RealizedDenominator;
  double relative_efficiency = 0.0;
  Ratio consumer_surplus;  // cents, mean per market (group) or per consumer
  Ratio expert_surplus;    // cents, mean per market (group) or per expert
  Ratio delta;
  double approach_rate = 0.0;
  FraudReport fraud;
  std::map<std::string, double> objective_attraction;
};

MetricSet compute_metrics(const MarketTally& tally, const MarketParams& params,
                          SurplusMode surplus = SurplusMode::GroupTotal,
                          EfficiencyMode efficiency = EfficiencyMode::RealizedDenominator);

// Realized group income over maximum potential income on realized problems.
Ratio relative_efficiency(const MarketOutcome& outcome, const MarketParams& params);

struct SurplusSplit {
  Ratio consumer;  // cents
  Ratio expert;
  Ratio delta;
};
SurplusSplit surplus_split(const MarketOutcome& outcome, SurplusMode mode);

FraudReport fraud_rates(const MarketTally& tally);

// Share of experts with at least one fraudulent slot when each of `slots`
// slots is fraudulent independently with probability p.
double expert_any_fraud_probability(double p, int slots);

}  // namespace credence

#endif  // CREDENCE_METRICS_HPP_
