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

#include "credence/equilibrium.hpp"

#include <algorithm>
#include <sstream>

namespace credence {

namespace {

struct Candidate {
  PricePair prices;
  Ratio consumer;
  Ratio expert;
  Ratio utility;
};

std::vector<Candidate> evaluate_grid(const MarketParams& params, Institution inst,
                                     Objective objective, const BeliefModel& belief) {
  std::vector<Candidate> out;
  for (PricePair pp : price_grid(params)) {
    ExpectedPayoffs e = expected_payoffs(params, inst, pp, objective);
    out.push_back({pp, expected_consumer_payoff(params, inst, pp, belief), e.expert,
                   e.utility});
  }
  return out;
}

// Keeps the candidates maximising `key`; order is preserved.
template <typename Key>
std::vector<Candidate> keep_max(const std::vector<Candidate>& in, Key key) {
  if (in.empty()) return {};
  Ratio best = key(in.front());
  for (const Candidate& c : in) best = std::max(best, key(c));
  std::vector<Candidate> out;
  for (const Candidate& c : in)
    if (key(c) == best) out.push_back(c);
  return out;
}

std::optional<int> fixed_low(const std::vector<PricePair>& set) {
  if (set.empty()) return std::nullopt;
  bool same_low = std::all_of(set.begin(), set.end(),
                              [&](PricePair p) { return p.low == set.front().low; });
  if (same_low) return set.front().low;
  return std::nullopt;
}

std::optional<int> fixed_high(const std::vector<PricePair>& set) {
  if (set.empty()) return std::nullopt;
  bool same = std::all_of(set.begin(), set.end(),
                          [&](PricePair p) { return p.high == set.front().high; });
  if (same) return set.front().high;
  return std::nullopt;
}

// Low price is a wildcard when the set holds one high price and every
// feasible low price for it.
bool spans_all_lows(const MarketParams& params, const std::vector<PricePair>& set) {
  auto hi = fixed_high(set);
  if (!hi) return false;
  return static_cast<int>(set.size()) == *hi - params.price_min + 1;
}

}  // namespace

std::string EquilibriumResult::prices_label() const {
  if (market_breaks_down) return "breakdown";
  if (p_high && !p_low) return "(*, " + std::to_string(*p_high) + ")";
  if (price_set.size() == 1) return price_set.front().to_string();
  std::string out = "{";
  for (std::size_t i = 0; i < price_set.size(); ++i) {
    if (i) out += ", ";
    out += price_set[i].to_string();
  }
  return out + "}";
}

BeliefModel regime_belief(Objective objective, bool transparent) {
  if (transparent) return BeliefModel::disclosed(objective);
  return BeliefModel::standard();
}

EquilibriumResult solve_prediction(const MarketParams& params, Institution inst,
                                   Objective objective, bool transparent,
                                   const SolverOptions& options) {
  params.validate();
  if (objective == Objective::NoObjective)
    throw std::invalid_argument("solve_prediction: NoObjective has no equilibrium");

  EquilibriumResult r;
  r.institution = inst;
  r.objective = objective;
  r.transparent = transparent;

  const Ratio sigma(params.outside_option.cents());
  std::vector<Candidate> feasible;
  for (const Candidate& c : evaluate_grid(params, inst, objective,
                                          regime_belief(objective, transparent))) {
    bool profit_ok = options.rule == SelectionRule::PositiveProfit ? c.expert > 0
                                                                   : c.expert >= 0;
    if (c.consumer >= sigma && profit_ok) feasible.push_back(c);
  }
  if (feasible.empty()) {
    r.market_breaks_down = true;
    r.consumer = sigma;
    r.expert = Ratio(0);
    r.total_income = sigma * params.n_consumers;
    return r;
  }

  std::vector<Candidate> chosen;
  if (objective == Objective::InequityAverse) {
    chosen = keep_max(feasible, [](const Candidate& c) { return c.utility; });
    chosen = keep_max(chosen, [](const Candidate& c) { return c.consumer; });
  } else {
    chosen = keep_max(feasible, [](const Candidate& c) { return c.consumer; });
    chosen = keep_max(chosen, [](const Candidate& c) { return c.utility; });
  }

  for (const Candidate& c : chosen) r.price_set.push_back(c.prices);
  r.representative = r.price_set.front();
  r.p_high = fixed_high(r.price_set);
  r.p_low = spans_all_lows(params, r.price_set) ? std::nullopt
                                                : fixed_low(r.price_set);
  for (ProblemType p : kProblemTypes)
    r.strategy[static_cast<std::size_t>(p)] =
        best_response(objective, params, inst, p, r.representative);
  r.consumer = chosen.front().consumer;
  r.expert = chosen.front().expert;
  r.total_income = (r.consumer + r.expert) * params.n_consumers;
  return r;
}

MonopolyResult monopoly_price(const MarketParams& params, Institution inst,
                              Objective objective) {
  // A zero outside option is admissible here: participation then only
  // requires a non-negative expected payoff.
  MarketParams checked = params;
  if (checked.outside_option == Money()) checked.outside_option = Money::from_cents(1);
  checked.validate();
  const Ratio sigma(params.outside_option.cents());
  BeliefModel belief = objective == Objective::SelfInterested
                           ? BeliefModel::standard()
                           : BeliefModel::disclosed(objective);
  std::vector<Candidate> all = evaluate_grid(params, inst, objective, belief);

  MonopolyResult m;
  std::vector<Candidate> feasible;
  for (const Candidate& c : all) {
    if (c.consumer >= sigma) {
      feasible.push_back(c);
      if (!m.participation_boundary || c.prices.high > *m.participation_boundary)
        m.participation_boundary = c.prices.high;
    }
  }
  m.participation = !feasible.empty();
  const std::vector<Candidate>& pool = m.participation ? feasible : all;
  std::vector<Candidate> best =
      keep_max(pool, [](const Candidate& c) { return c.expert; });
  best = keep_max(best, [](const Candidate& c) { return c.consumer; });
  for (const Candidate& c : best) m.price_set.push_back(c.prices);
  m.prices = m.price_set.front();
  m.p_low = spans_all_lows(params, m.price_set) ? std::nullopt
                                                : fixed_low(m.price_set);
  m.consumer = best.front().consumer;
  m.expert = best.front().expert;
  return m;
}

bool PredictionReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const PredictionCheck& c) { return c.pass; });
}

std::size_t PredictionReport::passed() const {
  return static_cast<std::size_t>(std::count_if(
      checks.begin(), checks.end(), [](const PredictionCheck& c) { return c.pass; }));
}

namespace {

struct Reference {
  const char* cell;
  std::vector<Institution> institutions;
  Objective objective;
  bool transparent;
  std::optional<int> p_low;  // nullopt: wildcard expected
  int p_high;
  std::int64_t consumer_cents;
  std::int64_t expert_cents;
  std::int64_t total_cents;
};

std::string describe(const Reference& ref) {
  std::ostringstream os;
  os << "(" << (ref.p_low ? std::to_string(*ref.p_low) : std::string("*")) << ", "
     << ref.p_high << ") consumer " << format_cents(Ratio(ref.consumer_cents))
     << " expert " << format_cents(Ratio(ref.expert_cents)) << " total "
     << format_cents(Ratio(ref.total_cents));
  return os.str();
}

bool matches(const Reference& ref, const EquilibriumResult& r) {
  return !r.market_breaks_down && r.p_high == ref.p_high && r.p_low == ref.p_low &&
         r.consumer == Ratio(ref.consumer_cents) &&
         r.expert == Ratio(ref.expert_cents) &&
         r.total_income == Ratio(ref.total_cents);
}

}  // namespace

PredictionReport verify_predictions(const MarketParams& params,
                                    const SolverOptions& options) {
  using I = Institution;
  const std::vector<Reference> refs = {
      {"NoInstitution / SelfInterested", {I::NoInstitution}, Objective::SelfInterested,
       false, std::nullopt, 3, 200, 100, 1200},
      {"Verifiability / SelfInterested", {I::Verifiability}, Objective::SelfInterested,
       false, 3, 7, 500, 100, 2400},
      {"Liability / SelfInterested", {I::Liability}, Objective::SelfInterested, false,
       std::nullopt, 5, 500, 100, 2400},
      {"NoInstitution / EfficiencyLoving (transparent)", {I::NoInstitution},
       Objective::EfficiencyLoving, true, std::nullopt, 5, 500, 100, 2400},
      {"All institutions / InequityAverse (transparent)",
       {I::NoInstitution, I::Verifiability, I::Liability}, Objective::InequityAverse,
       true, 6, 8, 300, 300, 2400},
  };
  PredictionReport report;
  for (const Reference& ref : refs) {
    PredictionCheck check;
    check.cell = ref.cell;
    check.expected = describe(ref);
    check.pass = true;
    for (Institution inst : ref.institutions) {
      EquilibriumResult r =
          solve_prediction(params, inst, ref.objective, ref.transparent, options);
      check.pass = check.pass && matches(ref, r);
      check.results.push_back(std::move(r));
    }
    report.checks.push_back(std::move(check));
  }
  return report;
}

}  // namespace credence
