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

// Domain model of the one-shot credence goods market: parameters, treatments,
// price menus, institutional legality, payoffs and fraud classification.
// Everything here is a value type and every function is pure.

#ifndef CREDENCE_CORE_HPP_
#define CREDENCE_CORE_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "credence/money.hpp"

namespace credence {

enum class ProblemType : std::uint8_t { Small, Big };
enum class Treatment : std::uint8_t { LCT, HCT };
enum class Tier : std::uint8_t { Low, High };
enum class Institution : std::uint8_t { NoInstitution, Verifiability, Liability };
enum class FraudKind : std::uint8_t { Undertreatment, Overtreatment, Overcharging };
enum class Objective : std::uint8_t {
  NoObjective,
  SelfInterested,
  InequityAverse,
  EfficiencyLoving
};

inline constexpr std::array<ProblemType, 2> kProblemTypes = {ProblemType::Small,
                                                             ProblemType::Big};
inline constexpr std::array<Institution, 3> kInstitutions = {
    Institution::NoInstitution, Institution::Verifiability,
    Institution::Liability};
inline constexpr std::array<Objective, 4> kObjectives = {
    Objective::NoObjective, Objective::SelfInterested,
    Objective::InequityAverse, Objective::EfficiencyLoving};
inline constexpr std::array<FraudKind, 3> kFraudKinds = {
    FraudKind::Undertreatment, FraudKind::Overtreatment,
    FraudKind::Overcharging};

std::string_view to_string(ProblemType p);
std::string_view to_string(Treatment t);
std::string_view to_string(Tier t);
std::string_view to_string(Institution i);
std::string_view to_string(FraudKind f);
std::string_view to_string(Objective o);

// Case-insensitive; accepts the canonical names plus common short forms
// ("none", "verif", "liab", "selfish", "inequity", "efficiency", "lct",
// "low"...). Throw std::invalid_argument on unknown input.
ProblemType parse_problem(std::string_view s);
Treatment parse_treatment(std::string_view s);
Tier parse_tier(std::string_view s);
Institution parse_institution(std::string_view s);
Objective parse_objective(std::string_view s);

struct MarketParams {
  Money value_solved = Money::from_units(10);
  Money outside_option = Money::from_cents(160);
  Ratio prob_big = Ratio(1, 2);
  Money cost_low = Money::from_units(2);
  Money cost_high = Money::from_units(6);
  int price_min = 1;
  int price_max = 11;
  int n_experts = 4;
  int n_consumers = 4;

  // Throws std::invalid_argument naming the violated constraint.
  void validate() const;
  Money cost(Treatment t) const {
    return t == Treatment::LCT ? cost_low : cost_high;
  }
  Ratio prob(ProblemType p) const {
    return p == ProblemType::Big ? prob_big : Ratio(1) - prob_big;
  }
  // Cost of the cheapest treatment that solves the problem.
  Money needed_cost(ProblemType p) const {
    return p == ProblemType::Big ? cost_high : cost_low;
  }
};

// Posted menu. Prices are whole currency units on the integer grid.
struct PricePair {
  int low = 0;
  int high = 0;

  Money charged(Tier t) const {
    return Money::from_units(t == Tier::Low ? low : high);
  }
  std::string to_string() const;  // "(3, 7)"
  friend constexpr auto operator<=>(const PricePair&, const PricePair&) = default;
};

bool is_valid(const MarketParams& params, PricePair prices);
// Throws std::invalid_argument when the pair is off-grid or low > high.
void validate_prices(const MarketParams& params, PricePair prices);
// Every valid pair in (low, high) lexicographic order; 66 for the defaults.
std::vector<PricePair> price_grid(const MarketParams& params);

struct ExpertAction {
  Treatment treatment = Treatment::LCT;
  Tier tier = Tier::Low;

  std::string to_string() const;  // "LCT/Low"
  friend constexpr bool operator==(const ExpertAction&, const ExpertAction&) = default;
};

// Canonical order: LCT/Low, LCT/High, HCT/Low, HCT/High.
inline constexpr std::array<ExpertAction, 4> kAllActions = {
    ExpertAction{Treatment::LCT, Tier::Low},
    ExpertAction{Treatment::LCT, Tier::High},
    ExpertAction{Treatment::HCT, Tier::Low},
    ExpertAction{Treatment::HCT, Tier::High}};
int canonical_index(ExpertAction a);

constexpr bool solves(Treatment t, ProblemType p) {
  return t == Treatment::HCT || p == ProblemType::Small;
}
constexpr Treatment sufficient_treatment(ProblemType p) {
  return p == ProblemType::Big ? Treatment::HCT : Treatment::LCT;
}
constexpr Tier matching_tier(Treatment t) {
  return t == Treatment::HCT ? Tier::High : Tier::Low;
}
// Minimal sufficient treatment charged at its own price.
constexpr bool is_honest(ProblemType p, ExpertAction a) {
  return a.treatment == sufficient_treatment(p) &&
         a.tier == matching_tier(a.treatment);
}

std::vector<ExpertAction> legal_actions(Institution inst, ProblemType problem);
bool is_legal(Institution inst, ProblemType problem, ExpertAction action);

struct InteractionPayoffs {
  Money consumer;
  Money expert;
};

InteractionPayoffs interaction_payoffs(const MarketParams& params,
                                       ProblemType problem, PricePair prices,
                                       ExpertAction action);

class FraudSet {
 public:
  constexpr FraudSet() = default;
  constexpr bool has(FraudKind k) const { return bits_ & bit(k); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr void add(FraudKind k) { bits_ |= bit(k); }
  constexpr std::uint8_t bits() const { return bits_; }
  std::vector<FraudKind> kinds() const;
  std::string to_string() const;  // "Undertreatment|Overcharging" or "none"
  friend constexpr bool operator==(FraudSet, FraudSet) = default;

 private:
  static constexpr std::uint8_t bit(FraudKind k) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(k));
  }
  std::uint8_t bits_ = 0;
};

FraudSet classify_fraud(ProblemType problem, ExpertAction action);

// Utility an expert with the given objective derives from one interaction,
// in cents. NoObjective has no utility; calling with it throws.
std::int64_t objective_utility(Objective objective, InteractionPayoffs payoffs);

// Best response of an expert with a well-defined objective, over the legal
// actions. Ties resolve by: honest treatment, then (EfficiencyLoving only)
// own payoff, then honest charge, then lower consumer charge, then canonical
// action order. Throws for NoObjective.
ExpertAction best_response(Objective objective, const MarketParams& params,
                           Institution inst, ProblemType problem,
                           PricePair prices);

// Consumer beliefs about how an expert will act after diagnosis.
struct BeliefModel {
  enum class Kind : std::uint8_t {
    // Self-interested expert; indifferent experts act honestly.
    StandardSelfInterest,
    // Self-interested expert; indifferent experts act against the consumer.
    Skeptical,
    // Expert follows the disclosed objective's best response.
    DisclosedObjective,
  };
  Kind kind = Kind::StandardSelfInterest;
  Objective objective = Objective::SelfInterested;

  static BeliefModel standard() { return {}; }
  static BeliefModel skeptical() { return {Kind::Skeptical, Objective::SelfInterested}; }
  static BeliefModel disclosed(Objective o) { return {Kind::DisclosedObjective, o}; }
  std::string to_string() const;
  friend constexpr bool operator==(const BeliefModel&, const BeliefModel&) = default;
};

// Expected consumer payoff (in cents) from approaching an expert posting
// `prices`, under the belief. Throws std::invalid_argument on invalid prices.
Ratio expected_consumer_payoff(const MarketParams& params, Institution inst,
                               PricePair prices, const BeliefModel& belief);

struct ExpectedPayoffs {
  Ratio consumer;  // cents
  Ratio expert;    // cents
  Ratio utility;   // cents, in the objective's own units
};

// Expected per-interaction payoffs when the expert best-responds per problem.
ExpectedPayoffs expected_payoffs(const MarketParams& params, Institution inst,
                                 PricePair prices, Objective objective);

}  // namespace credence

#endif  // CREDENCE_CORE_HPP_
