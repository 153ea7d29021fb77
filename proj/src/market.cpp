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

#include "credence/market.hpp"

namespace credence {

void MarketSetup::validate() const {
  params.validate();
  if (experts.size() != static_cast<std::size_t>(params.n_experts))
    throw std::invalid_argument("expected " + std::to_string(params.n_experts) +
                                " expert policies, got " + std::to_string(experts.size()));
  if (consumers.size() != static_cast<std::size_t>(params.n_consumers))
    throw std::invalid_argument("expected " + std::to_string(params.n_consumers) +
                                " consumer policies, got " +
                                std::to_string(consumers.size()));
  for (const auto& e : experts)
    if (!e) throw std::invalid_argument("null expert policy");
  for (const auto& c : consumers)
    if (!c) throw std::invalid_argument("null consumer policy");
}

namespace {

void check_plan(const MarketSetup& setup, std::size_t e, const ExpertPlan& plan) {
  const std::string who = "expert " + std::to_string(e) + " (" + setup.experts[e]->id() + ")";
  if (!is_valid(setup.params, plan.strategy.prices))
    throw MarketError(who + " posted invalid prices " + plan.strategy.prices.to_string());
  if (plan.strategy.slots.size() != static_cast<std::size_t>(setup.params.n_consumers))
    throw MarketError(who + " planned " + std::to_string(plan.strategy.slots.size()) +
                      " slots, expected " + std::to_string(setup.params.n_consumers));
  for (std::size_t j = 0; j < plan.strategy.slots.size(); ++j) {
    for (ProblemType p : kProblemTypes) {
      ExpertAction a = plan.strategy.slots[j].for_problem(p);
      if (!is_legal(setup.institution, p, a))
        throw MarketError(who + " slot " + std::to_string(j) + " plays illegal " +
                          a.to_string() + " on a " + std::string(to_string(p)) +
                          " problem under " + std::string(to_string(setup.institution)));
    }
  }
}

ExpertOffer make_offer(std::size_t e, PricePair prices, bool delegated,
                       std::optional<Objective> objective, bool transparency) {
  ExpertOffer o;
  o.expert_index = e;
  o.prices = prices;
  o.delegated = delegated;
  if (transparency && delegated) o.disclosed_objective = objective;
  return o;
}

}  // namespace

MarketOutcome run_market(const MarketSetup& setup, const RandomStream& market) {
  MarketOutcome out = post_offers(setup, market);
  resolve_market(setup, market, out);
  return out;
}

MarketOutcome post_offers(const MarketSetup& setup, const RandomStream& market) {
  setup.validate();
  const MarketParams& params = setup.params;
  const auto n_e = static_cast<std::size_t>(params.n_experts);

  MarketOutcome out;
  out.institution = setup.institution;
  out.transparency = setup.transparency;

  // (1) Offers and strategy-method plans.
  for (std::size_t e = 0; e < n_e; ++e) {
    DecisionContext ctx{params, setup.institution, e, market};
    ExpertPlan plan = setup.experts[e]->decide(ctx);
    check_plan(setup, e, plan);
    out.offers.push_back(make_offer(e, plan.strategy.prices, plan.delegated,
                                    plan.llm_objective, setup.transparency));
    out.llm_objectives.push_back(plan.delegated ? plan.llm_objective : std::nullopt);
    out.strategies.push_back(std::move(plan.strategy));
  }
  return out;
}

void resolve_market(const MarketSetup& setup, const RandomStream& market, MarketOutcome& out) {
  setup.validate();
  const MarketParams& params = setup.params;
  const auto n_e = static_cast<std::size_t>(params.n_experts);
  const auto n_c = static_cast<std::size_t>(params.n_consumers);
  if (out.offers.size() != n_e || !out.choices.empty())
    throw std::logic_error("resolve_market needs a freshly posted outcome");

  // (2) Simultaneous choices from the same offers.
  for (std::size_t j = 0; j < n_c; ++j) {
    RandomStream rng = market.child(kTagConsumer, j);
    out.choices.push_back(consumer_choose(*setup.consumers[j], params, setup.institution,
                                          out.offers, rng, j, &market));
  }

  // (3) Problems, drawn after choices.
  for (std::size_t j = 0; j < n_c; ++j) {
    RandomStream rng = market.child(kTagProblem, j);
    out.problems.push_back(rng.bernoulli(params.prob_big) ? ProblemType::Big
                                                          : ProblemType::Small);
  }

  // (4)-(5) Actions and payoffs.
  out.expert_payoffs.assign(n_e, Money());
  for (std::size_t j = 0; j < n_c; ++j) {
    const ConsumerChoice& c = out.choices[j];
    if (!c.approached()) {
      ++out.optout_count;
      out.actions.push_back(std::nullopt);
      out.fraud.push_back(FraudSet());
      out.consumer_payoffs.push_back(params.outside_option);
      continue;
    }
    std::size_t e = *c.expert;
    ExpertAction a = out.planned_action(e, j);
    InteractionPayoffs p = interaction_payoffs(params, out.problems[j],
                                               out.strategies[e].prices, a);
    out.actions.push_back(a);
    out.fraud.push_back(classify_fraud(out.problems[j], a));
    out.consumer_payoffs.push_back(p.consumer);
    out.expert_payoffs[e] += p.expert;
  }
}

Ratio expected_max_income_per_consumer(const MarketParams& params) {
  Ratio total(0);
  for (ProblemType p : kProblemTypes)
    total += params.prob(p) * (params.value_solved - params.needed_cost(p)).cents();
  return total;
}

std::optional<ExpectedMarket> expected_market(const MarketSetup& setup) {
  setup.validate();
  const MarketParams& params = setup.params;
  std::vector<ExpertOffer> offers;
  std::vector<Ratio> e_consumer, e_expert;
  for (std::size_t e = 0; e < setup.experts.size(); ++e) {
    std::optional<AnalyticPlan> plan =
        setup.experts[e]->analytic_plan(params, setup.institution);
    if (!plan) return std::nullopt;
    if (!is_valid(params, plan->prices))
      throw MarketError("expert " + std::to_string(e) + " posted invalid prices");
    Ratio ec(0), ee(0);
    for (ProblemType p : kProblemTypes) {
      for (const auto& [a, w] : plan->actions[static_cast<std::size_t>(p)].outcomes) {
        if (w == 0) continue;
        if (!is_legal(setup.institution, p, a))
          throw MarketError("expert " + std::to_string(e) + " plays illegal " + a.to_string());
        InteractionPayoffs pay = interaction_payoffs(params, p, plan->prices, a);
        ec += params.prob(p) * w * pay.consumer.cents();
        ee += params.prob(p) * w * pay.expert.cents();
      }
    }
    e_consumer.push_back(ec);
    e_expert.push_back(ee);
    offers.push_back(make_offer(e, plan->prices, plan->delegated, plan->llm_objective,
                                setup.transparency));
  }

  ExpectedMarket m{Ratio(0), Ratio(0), Ratio(0), Ratio(0)};
  const Ratio sigma(params.outside_option.cents());
  for (const auto& consumer : setup.consumers) {
    auto dist = consumer_choice_distribution(*consumer, params, setup.institution, offers);
    if (!dist) return std::nullopt;
    for (std::size_t e = 0; e < offers.size(); ++e) {
      m.consumer_surplus += (*dist)[e] * e_consumer[e];
      m.expert_surplus += (*dist)[e] * e_expert[e];
    }
    m.consumer_surplus += dist->back() * sigma;
    m.approach_rate += Ratio(1) - dist->back();
  }
  m.approach_rate /= static_cast<std::int64_t>(setup.consumers.size());
  m.max_income = expected_max_income_per_consumer(params) *
                 static_cast<std::int64_t>(setup.consumers.size());
  return m;
}

}  // namespace credence
