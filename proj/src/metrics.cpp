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

#include "credence/metrics.hpp"

#include <cmath>

namespace credence {

std::string_view to_string(SurplusMode m) {
  return m == SurplusMode::GroupTotal ? "group-total" : "per-capita";
}

std::string_view to_string(EfficiencyMode m) {
  return m == EfficiencyMode::RealizedDenominator ? "realized" : "expected";
}

SurplusMode parse_surplus_mode(std::string_view s) {
  if (s == "group-total" || s == "group" || s == "GroupTotal") return SurplusMode::GroupTotal;
  if (s == "per-capita" || s == "PerCapita") return SurplusMode::PerCapita;
  throw std::invalid_argument("unknown surplus mode '" + std::string(s) + "'");
}

EfficiencyMode parse_efficiency_mode(std::string_view s) {
  if (s == "realized" || s == "RealizedDenominator") return EfficiencyMode::RealizedDenominator;
  if (s == "expected" || s == "ExpectedDenominator") return EfficiencyMode::ExpectedDenominator;
  throw std::invalid_argument("unknown efficiency mode '" + std::string(s) + "'");
}

namespace {

std::int64_t realized_max(const MarketOutcome& o, const MarketParams& params) {
  std::int64_t total = 0;
  for (ProblemType p : o.problems)
    total += (params.value_solved - params.needed_cost(p)).cents();
  return total;
}

std::int64_t scaled_round(const Ratio& r, std::int64_t scale) {
  // Round half away from zero of r * scale without overflowing.
  std::int64_t num = r.numerator(), den = r.denominator();
  std::int64_t whole = num / den, rem = num % den;
  __int128 frac = static_cast<__int128>(rem) * scale;
  __int128 q = frac / den, rq = frac % den;
  if (2 * (rq < 0 ? -rq : rq) >= den) q += (frac < 0 ? -1 : 1);
  return whole * scale + static_cast<std::int64_t>(q);
}

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void MarketTally::add(const MarketOutcome& o, const MarketParams& params) {
  ++markets;
  consumers += static_cast<std::int64_t>(o.choices.size());
  experts += static_cast<std::int64_t>(o.strategies.size());
  std::int64_t income = 0;
  for (Money m : o.consumer_payoffs) {
    consumer_cents += m.cents();
    income += m.cents();
  }
  for (Money m : o.expert_payoffs) {
    expert_cents += m.cents();
    income += m.cents();
  }
  std::int64_t max = realized_max(o, params);
  realized_max_cents += max;
  efficiency_units += scaled_round(Ratio(income, max), kEfficiencyScale);

  for (std::size_t j = 0; j < o.choices.size(); ++j) {
    const ConsumerChoice& c = o.choices[j];
    if (!c.approached()) {
      ++attraction["optout"];
      continue;
    }
    ++approaches;
    std::size_t e = *c.expert;
    const auto& obj = o.llm_objectives[e];
    ++attraction[obj ? std::string(to_string(*obj)) : std::string("own")];

    ExpertAction a = *o.actions[j];
    FraudSet f = o.fraud[j];
    ++served;
    if (o.problems[j] == ProblemType::Small) ++served_small; else ++served_big;
    if (a.treatment == Treatment::LCT) ++served_lct;
    for (FraudKind k : kFraudKinds)
      if (f.has(k)) ++served_fraud[static_cast<std::size_t>(k)];
    if (!f.empty()) ++served_any_fraud;
  }

  for (std::size_t e = 0; e < o.strategies.size(); ++e) {
    bool any = false;
    for (std::size_t j = 0; j < o.strategies[e].slots.size(); ++j) {
      ExpertAction a = o.planned_action(e, j);
      FraudSet f = classify_fraud(o.problems[j], a);
      ++slots;
      if (o.problems[j] == ProblemType::Small) ++slots_small; else ++slots_big;
      if (a.treatment == Treatment::LCT) ++slots_lct;
      for (FraudKind k : kFraudKinds)
        if (f.has(k)) ++slot_fraud[static_cast<std::size_t>(k)];
      if (!f.empty()) {
        ++slot_any_fraud;
        any = true;
      }
    }
    if (any) ++experts_any_fraud;
  }
}

void MarketTally::merge(const MarketTally& t) {
  markets += t.markets;
  consumers += t.consumers;
  experts += t.experts;
  approaches += t.approaches;
  consumer_cents += t.consumer_cents;
  expert_cents += t.expert_cents;
  realized_max_cents += t.realized_max_cents;
  efficiency_units += t.efficiency_units;
  served += t.served;
  served_small += t.served_small;
  served_big += t.served_big;
  served_lct += t.served_lct;
  slots += t.slots;
  slots_small += t.slots_small;
  slots_big += t.slots_big;
  slots_lct += t.slots_lct;
  for (std::size_t k = 0; k < 3; ++k) {
    served_fraud[k] += t.served_fraud[k];
    slot_fraud[k] += t.slot_fraud[k];
  }
  served_any_fraud += t.served_any_fraud;
  slot_any_fraud += t.slot_any_fraud;
  experts_any_fraud += t.experts_any_fraud;
  for (const auto& [k, v] : t.attraction) attraction[k] += v;
}

FraudReport fraud_rates(const MarketTally& t) {
  FraudReport r;
  const auto u = static_cast<std::size_t>(FraudKind::Undertreatment);
  const auto o = static_cast<std::size_t>(FraudKind::Overtreatment);
  const auto c = static_cast<std::size_t>(FraudKind::Overcharging);
  for (FraudKind k : kFraudKinds) {
    auto i = static_cast<std::size_t>(k);
    r.per_decision[k] = ratio(t.served_fraud[i], t.served);
    r.per_slot[k] = ratio(t.slot_fraud[i], t.slots);
  }
  r.conditional[FraudKind::Undertreatment] = ratio(t.served_fraud[u], t.served_big);
  r.conditional[FraudKind::Overtreatment] = ratio(t.served_fraud[o], t.served_small);
  r.conditional[FraudKind::Overcharging] = ratio(t.served_fraud[c], t.served_lct);
  r.any_per_decision = ratio(t.served_any_fraud, t.served);
  r.any_per_slot = ratio(t.slot_any_fraud, t.slots);
  r.expert_any = ratio(t.experts_any_fraud, t.experts);
  return r;
}

MetricSet compute_metrics(const MarketTally& t, const MarketParams& params,
                          SurplusMode surplus, EfficiencyMode efficiency) {
  if (t.markets == 0) throw std::invalid_argument("compute_metrics: no markets");
  MetricSet m;
  m.markets = t.markets;
  m.surplus_mode = surplus;
  m.efficiency_mode = efficiency;
  if (surplus == SurplusMode::GroupTotal) {
    m.consumer_surplus = Ratio(t.consumer_cents, t.markets);
    m.expert_surplus = Ratio(t.expert_cents, t.markets);
  } else {
    m.consumer_surplus = Ratio(t.consumer_cents, t.consumers);
    m.expert_surplus = Ratio(t.expert_cents, t.experts);
  }
  m.delta = m.consumer_surplus - m.expert_surplus;
  if (efficiency == EfficiencyMode::RealizedDenominator) {
    m.relative_efficiency = static_cast<double>(t.efficiency_units) /
                            static_cast<double>(kEfficiencyScale) /
                            static_cast<double>(t.markets);
  } else {
    Ratio mean_income(t.consumer_cents + t.expert_cents, t.markets);
    Ratio max = expected_max_income_per_consumer(params) * (t.consumers / t.markets);
    m.relative_efficiency = ratio_to_double(mean_income / max);
  }
  m.approach_rate = ratio(t.approaches, t.consumers);
  m.fraud = fraud_rates(t);
  for (const auto& [k, v] : t.attraction) m.objective_attraction[k] = ratio(v, t.consumers);
  return m;
}

Ratio relative_efficiency(const MarketOutcome& o, const MarketParams& params) {
  std::int64_t income = 0;
  for (Money m : o.consumer_payoffs) income += m.cents();
  for (Money m : o.expert_payoffs) income += m.cents();
  return Ratio(income, realized_max(o, params));
}

SurplusSplit surplus_split(const MarketOutcome& o, SurplusMode mode) {
  Ratio cs(0), es(0);
  for (Money m : o.consumer_payoffs) cs += m.cents();
  for (Money m : o.expert_payoffs) es += m.cents();
  if (mode == SurplusMode::PerCapita) {
    cs /= static_cast<std::int64_t>(o.consumer_payoffs.size());
    es /= static_cast<std::int64_t>(o.expert_payoffs.size());
  }
  return {cs, es, cs - es};
}

double expert_any_fraud_probability(double p, int slots) {
  return 1.0 - std::pow(1.0 - p, slots);
}

}  // namespace credence
