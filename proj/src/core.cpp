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

#include "credence/core.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <tuple>

namespace credence {
namespace {

std::string lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

[[noreturn]] void unknown(std::string_view what, std::string_view value) {
  throw std::invalid_argument("unknown " + std::string(what) + ": '" +
                              std::string(value) + "'");
}

}  // namespace

std::string_view to_string(ProblemType p) {
  return p == ProblemType::Small ? "Small" : "Big";
}
std::string_view to_string(Treatment t) {
  return t == Treatment::LCT ? "LCT" : "HCT";
}
std::string_view to_string(Tier t) { return t == Tier::Low ? "Low" : "High"; }
std::string_view to_string(Institution i) {
  switch (i) {
    case Institution::NoInstitution: return "NoInstitution";
    case Institution::Verifiability: return "Verifiability";
    case Institution::Liability: return "Liability";
  }
  return "?";
}
std::string_view to_string(FraudKind f) {
  switch (f) {
    case FraudKind::Undertreatment: return "Undertreatment";
    case FraudKind::Overtreatment: return "Overtreatment";
    case FraudKind::Overcharging: return "Overcharging";
  }
  return "?";
}
std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::NoObjective: return "NoObjective";
    case Objective::SelfInterested: return "SelfInterested";
    case Objective::InequityAverse: return "InequityAverse";
    case Objective::EfficiencyLoving: return "EfficiencyLoving";
  }
  return "?";
}

ProblemType parse_problem(std::string_view s) {
  std::string k = lower(s);
  if (k == "small" || k == "s") return ProblemType::Small;
  if (k == "big" || k == "b" || k == "large") return ProblemType::Big;
  unknown("problem type", s);
}

Treatment parse_treatment(std::string_view s) {
  std::string k = lower(s);
  if (k == "lct" || k == "low" || k == "lowcost") return Treatment::LCT;
  if (k == "hct" || k == "high" || k == "highcost") return Treatment::HCT;
  unknown("treatment", s);
}

Tier parse_tier(std::string_view s) {
  std::string k = lower(s);
  if (k == "low" || k == "l" || k == "plow" || k == "small") return Tier::Low;
  if (k == "high" || k == "h" || k == "phigh" || k == "big") return Tier::High;
  unknown("charge tier", s);
}

Institution parse_institution(std::string_view s) {
  std::string k = lower(s);
  if (k == "noinstitution" || k == "none" || k == "ni" || k == "free")
    return Institution::NoInstitution;
  if (k == "verifiability" || k == "verif" || k == "v")
    return Institution::Verifiability;
  if (k == "liability" || k == "liab" || k == "l") return Institution::Liability;
  unknown("institution", s);
}

Objective parse_objective(std::string_view s) {
  std::string k = lower(s);
  if (k == "noobjective" || k == "none" || k == "no") return Objective::NoObjective;
  if (k == "selfinterested" || k == "selfish" || k == "self" ||
      k == "maximizepayoff")
    return Objective::SelfInterested;
  if (k == "inequityaverse" || k == "inequity" || k == "fair" || k == "fairness")
    return Objective::InequityAverse;
  if (k == "efficiencyloving" || k == "efficiency" || k == "total")
    return Objective::EfficiencyLoving;
  unknown("objective", s);
}

void MarketParams::validate() const {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("invalid market params: " + msg);
  };
  if (!is_probability(prob_big)) fail("prob_big must lie in [0, 1]");
  if (!(cost_low < cost_high)) fail("cost_low must be below cost_high");
  if (!(cost_high < value_solved)) fail("cost_high must be below value_solved");
  if (!(Money() < outside_option && outside_option < value_solved))
    fail("outside_option must lie strictly between 0 and value_solved");
  if (price_min > price_max) fail("price_min must not exceed price_max");
  if (n_experts < 1) fail("n_experts must be at least 1");
  if (n_consumers < 1) fail("n_consumers must be at least 1");
}

std::string PricePair::to_string() const {
  return "(" + std::to_string(low) + ", " + std::to_string(high) + ")";
}

bool is_valid(const MarketParams& params, PricePair p) {
  return params.price_min <= p.low && p.low <= p.high &&
         p.high <= params.price_max;
}

void validate_prices(const MarketParams& params, PricePair p) {
  if (!is_valid(params, p)) {
    throw std::invalid_argument(
        "invalid price pair " + p.to_string() + ": need " +
        std::to_string(params.price_min) + " <= low <= high <= " +
        std::to_string(params.price_max));
  }
}

std::vector<PricePair> price_grid(const MarketParams& params) {
  std::vector<PricePair> grid;
  for (int lo = params.price_min; lo <= params.price_max; ++lo)
    for (int hi = lo; hi <= params.price_max; ++hi) grid.push_back({lo, hi});
  return grid;
}

std::string ExpertAction::to_string() const {
  return std::string(credence::to_string(treatment)) + "/" +
         std::string(credence::to_string(tier));
}

int canonical_index(ExpertAction a) {
  return 2 * static_cast<int>(a.treatment) + static_cast<int>(a.tier);
}

bool is_legal(Institution inst, ProblemType problem, ExpertAction a) {
  switch (inst) {
    case Institution::NoInstitution:
      return true;
    case Institution::Verifiability:
      return a.tier == matching_tier(a.treatment);
    case Institution::Liability:
      return solves(a.treatment, problem);
  }
  return false;
}

std::vector<ExpertAction> legal_actions(Institution inst, ProblemType problem) {
  std::vector<ExpertAction> out;
  for (const ExpertAction& a : kAllActions)
    if (is_legal(inst, problem, a)) out.push_back(a);
  return out;
}

InteractionPayoffs interaction_payoffs(const MarketParams& params,
                                       ProblemType problem, PricePair prices,
                                       ExpertAction action) {
  Money charge = prices.charged(action.tier);
  Money benefit = solves(action.treatment, problem) ? params.value_solved : Money();
  return {benefit - charge, charge - params.cost(action.treatment)};
}

std::vector<FraudKind> FraudSet::kinds() const {
  std::vector<FraudKind> out;
  for (FraudKind k : kFraudKinds)
    if (has(k)) out.push_back(k);
  return out;
}

std::string FraudSet::to_string() const {
  if (empty()) return "none";
  std::string out;
  for (FraudKind k : kinds()) {
    if (!out.empty()) out += "|";
    out += credence::to_string(k);
  }
  return out;
}

FraudSet classify_fraud(ProblemType problem, ExpertAction action) {
  FraudSet s;
  if (problem == ProblemType::Big && action.treatment == Treatment::LCT)
    s.add(FraudKind::Undertreatment);
  if (problem == ProblemType::Small && action.treatment == Treatment::HCT)
    s.add(FraudKind::Overtreatment);
  if (action.treatment == Treatment::LCT && action.tier == Tier::High)
    s.add(FraudKind::Overcharging);
  return s;
}

std::int64_t objective_utility(Objective objective, InteractionPayoffs p) {
  switch (objective) {
    case Objective::SelfInterested:
      return p.expert.cents();
    case Objective::InequityAverse:
      return -std::llabs(p.expert.cents() - p.consumer.cents());
    case Objective::EfficiencyLoving:
      return p.expert.cents() + p.consumer.cents();
    case Objective::NoObjective:
      break;
  }
  throw std::invalid_argument("NoObjective has no utility function");
}

ExpertAction best_response(Objective objective, const MarketParams& params,
                           Institution inst, ProblemType problem,
                           PricePair prices) {
  using Key = std::tuple<std::int64_t, bool, std::int64_t, bool, std::int64_t, int>;
  std::optional<std::pair<Key, ExpertAction>> best;
  for (const ExpertAction& a : legal_actions(inst, problem)) {
    InteractionPayoffs p = interaction_payoffs(params, problem, prices, a);
    Key key{objective_utility(objective, p),
            a.treatment == sufficient_treatment(problem),
            objective == Objective::EfficiencyLoving ? p.expert.cents() : 0,
            a.tier == matching_tier(a.treatment),
            -prices.charged(a.tier).cents(),
            -canonical_index(a)};
    if (!best || key > best->first) best.emplace(key, a);
  }
  return best->second;
}

std::string BeliefModel::to_string() const {
  switch (kind) {
    case Kind::StandardSelfInterest: return "Standard";
    case Kind::Skeptical: return "Skeptical";
    case Kind::DisclosedObjective:
      return "Disclosed(" + std::string(credence::to_string(objective)) + ")";
  }
  return "?";
}

ExpectedPayoffs expected_payoffs(const MarketParams& params, Institution inst,
                                 PricePair prices, Objective objective) {
  validate_prices(params, prices);
  ExpectedPayoffs out{Ratio(0), Ratio(0), Ratio(0)};
  for (ProblemType problem : kProblemTypes) {
    ExpertAction a = best_response(objective, params, inst, problem, prices);
    InteractionPayoffs p = interaction_payoffs(params, problem, prices, a);
    Ratio w = params.prob(problem);
    out.consumer += w * p.consumer.cents();
    out.expert += w * p.expert.cents();
    out.utility += w * objective_utility(objective, p);
  }
  return out;
}

namespace {

// Closed forms for a self-interested expert. `skeptical` resolves the
// expert's indifference against the consumer instead of toward honesty.
Ratio self_interest_payoff(const MarketParams& params, Institution inst,
                           PricePair prices, bool skeptical) {
  const Ratio h = params.prob_big;
  const Ratio v(params.value_solved.cents());
  const Ratio lo(prices.charged(Tier::Low).cents());
  const Ratio hi(prices.charged(Tier::High).cents());
  switch (inst) {
    case Institution::NoInstitution:
      // Always LCT, always charge the high price.
      return (Ratio(1) - h) * (v - hi) - h * hi;
    case Institution::Liability:
      // Must solve; always charge the high price.
      return v - hi;
    case Institution::Verifiability: {
      Ratio markup_high = hi - params.cost_high.cents();
      Ratio markup_low = lo - params.cost_low.cents();
      if (markup_high > markup_low) return v - hi;
      if (markup_high < markup_low) return (Ratio(1) - h) * v - lo;
      if (!skeptical) return v - lo - h * (hi - lo);
      return (Ratio(1) - h) * std::min(v - lo, v - hi) +
             h * std::min(-lo, v - hi);
    }
  }
  return Ratio(0);
}

}  // namespace

Ratio expected_consumer_payoff(const MarketParams& params, Institution inst,
                               PricePair prices, const BeliefModel& belief) {
  validate_prices(params, prices);
  switch (belief.kind) {
    case BeliefModel::Kind::StandardSelfInterest:
      return self_interest_payoff(params, inst, prices, false);
    case BeliefModel::Kind::Skeptical:
      return self_interest_payoff(params, inst, prices, true);
    case BeliefModel::Kind::DisclosedObjective:
      break;
  }
  switch (belief.objective) {
    case Objective::NoObjective:
    case Objective::SelfInterested:
      return self_interest_payoff(params, inst, prices, false);
    case Objective::EfficiencyLoving: {
      // Never under- or overtreats. Charges high whenever the tier is free.
      const Ratio v(params.value_solved.cents());
      const Ratio hi(prices.charged(Tier::High).cents());
      if (inst != Institution::Verifiability) return v - hi;
      const Ratio lo(prices.charged(Tier::Low).cents());
      return v - lo - params.prob_big * (hi - lo);
    }
    case Objective::InequityAverse:
      return expected_payoffs(params, inst, prices, Objective::InequityAverse)
          .consumer;
  }
  return Ratio(0);
}

}  // namespace credence
