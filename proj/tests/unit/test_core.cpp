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

#include <algorithm>

#include "credence/core.hpp"
#include "credence/rng.hpp"
#include "doctest.h"
#include "../support/oracles.hpp"

using namespace credence;

namespace {

const ExpertAction kLL{Treatment::LCT, Tier::Low};
const ExpertAction kLH{Treatment::LCT, Tier::High};
const ExpertAction kHL{Treatment::HCT, Tier::Low};
const ExpertAction kHH{Treatment::HCT, Tier::High};

bool contains(const std::vector<ExpertAction>& v, ExpertAction a) {
  return std::find(v.begin(), v.end(), a) != v.end();
}

Ratio units(std::int64_t u) { return Ratio(u * 100); }

}  // namespace

TEST_SUITE("core") {

TEST_CASE("money parses and formats two decimals") {
  CHECK(Money::parse("1.6").cents() == 160);
  CHECK(Money::parse("-0.05").cents() == -5);
  CHECK(Money::from_units(10).to_string() == "10.00");
  CHECK(format_cents(Ratio(1568)) == "15.68");
  CHECK(format_cents(Ratio(-1, 2)) == "-0.01");
  CHECK(parse_probability("0.98") == Ratio(49, 50));
  CHECK(parse_probability("23/25") == Ratio(23, 25));
  CHECK_THROWS(Money::parse("1.234"));
  CHECK_THROWS(parse_probability("1.5"));
}

TEST_CASE("parameters validate their invariants") {
  MarketParams p;
  CHECK_NOTHROW(p.validate());
  p.cost_high = Money::from_units(11);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = MarketParams{};
  p.outside_option = Money();
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = MarketParams{};
  p.n_experts = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("price grid holds every ordered pair") {
  MarketParams p;
  auto grid = price_grid(p);
  CHECK(grid.size() == 66);
  CHECK(grid.front() == PricePair{1, 1});
  CHECK(grid.back() == PricePair{11, 11});
  CHECK_FALSE(is_valid(p, {5, 4}));
  CHECK_FALSE(is_valid(p, {1, 12}));
  CHECK_THROWS(validate_prices(p, {0, 3}));
}

TEST_CASE("legal actions per institution") {
  auto vb = legal_actions(Institution::Verifiability, ProblemType::Big);
  CHECK(vb.size() == 2);
  CHECK(contains(vb, kLL));
  CHECK(contains(vb, kHH));

  auto lb = legal_actions(Institution::Liability, ProblemType::Big);
  CHECK(lb.size() == 2);
  CHECK(contains(lb, kHL));
  CHECK(contains(lb, kHH));

  CHECK(legal_actions(Institution::NoInstitution, ProblemType::Small).size() == 4);
  CHECK(legal_actions(Institution::Liability, ProblemType::Small).size() == 4);
}

TEST_CASE("interaction payoffs") {
  MarketParams p;
  auto a = interaction_payoffs(p, ProblemType::Big, {4, 7}, kHH);
  CHECK(a.consumer.cents() == 300);
  CHECK(a.expert.cents() == 100);
  auto b = interaction_payoffs(p, ProblemType::Big, {3, 5}, kLH);
  CHECK(b.consumer.cents() == -500);
  CHECK(b.expert.cents() == 300);
  auto c = interaction_payoffs(p, ProblemType::Small, {4, 8}, kLL);
  CHECK(c.consumer.cents() == 600);
  CHECK(c.expert.cents() == 200);
}

TEST_CASE("payoff conservation over random inputs") {
  MarketParams p;
  RandomStream rng(7);
  auto grid = price_grid(p);
  for (int i = 0; i < 5000; ++i) {
    PricePair pp = grid[rng.uniform_index(grid.size())];
    ProblemType prob = rng.bernoulli(Ratio(1, 2)) ? ProblemType::Big : ProblemType::Small;
    ExpertAction a = kAllActions[rng.uniform_index(4)];
    auto pay = interaction_payoffs(p, prob, pp, a);
    Money gross = solves(a.treatment, prob) ? p.value_solved : Money();
    CHECK(pay.consumer + pay.expert == gross - p.cost(a.treatment));
  }
}

TEST_CASE("fraud classification") {
  auto f = classify_fraud(ProblemType::Big, kLH);
  CHECK(f.has(FraudKind::Undertreatment));
  CHECK(f.has(FraudKind::Overcharging));
  CHECK_FALSE(f.has(FraudKind::Overtreatment));
  CHECK(classify_fraud(ProblemType::Small, kLL).empty());
  auto o = classify_fraud(ProblemType::Small, kHH);
  CHECK(o.has(FraudKind::Overtreatment));
  CHECK(o.kinds().size() == 1);
  CHECK(classify_fraud(ProblemType::Big, kHL).empty());
  CHECK(f.to_string() == "Undertreatment|Overcharging");
}

TEST_CASE("legality closure") {
  for (ProblemType p : kProblemTypes) {
    for (ExpertAction a : legal_actions(Institution::Liability, p))
      CHECK_FALSE(classify_fraud(p, a).has(FraudKind::Undertreatment));
    for (ExpertAction a : legal_actions(Institution::Verifiability, p))
      CHECK_FALSE(classify_fraud(p, a).has(FraudKind::Overcharging));
  }
}

TEST_CASE("objective utilities") {
  InteractionPayoffs p{Money::from_units(3), Money::from_units(1)};
  CHECK(objective_utility(Objective::SelfInterested, p) == 100);
  CHECK(objective_utility(Objective::InequityAverse, p) == -200);
  CHECK(objective_utility(Objective::EfficiencyLoving, p) == 400);
  CHECK_THROWS(objective_utility(Objective::NoObjective, p));
}

TEST_CASE("best responses") {
  MarketParams p;
  CHECK(best_response(Objective::SelfInterested, p, Institution::NoInstitution,
                      ProblemType::Big, {3, 7}) == kLH);
  CHECK(best_response(Objective::EfficiencyLoving, p, Institution::NoInstitution,
                      ProblemType::Big, {3, 7}) == kHH);
  CHECK(best_response(Objective::SelfInterested, p, Institution::Verifiability,
                      ProblemType::Big, {3, 7}) == kHH);
  CHECK(best_response(Objective::InequityAverse, p, Institution::Liability,
                      ProblemType::Small, {6, 8}) == kLL);
  // Equity at (4, 8): overtreating a small problem splits 2 / 2.
  CHECK(best_response(Objective::InequityAverse, p, Institution::NoInstitution,
                      ProblemType::Small, {4, 8}) == kHH);
  CHECK_THROWS(best_response(Objective::NoObjective, p, Institution::Liability,
                             ProblemType::Small, {6, 8}));
}

TEST_CASE("self-interested best response maximises own payoff") {
  MarketParams p;
  for (Institution inst : kInstitutions)
    for (ProblemType prob : kProblemTypes)
      for (PricePair pp : price_grid(p)) {
        ExpertAction br = best_response(Objective::SelfInterested, p, inst, prob, pp);
        Money mine = interaction_payoffs(p, prob, pp, br).expert;
        for (ExpertAction a : legal_actions(inst, prob))
          CHECK(interaction_payoffs(p, prob, pp, a).expert <= mine);
      }
}

TEST_CASE("expected consumer payoff examples") {
  MarketParams p;
  auto std_belief = BeliefModel::standard();
  CHECK(expected_consumer_payoff(p, Institution::NoInstitution, {1, 3}, std_belief) == units(2));
  CHECK(expected_consumer_payoff(p, Institution::Verifiability, {3, 7}, std_belief) == units(5));
  CHECK(expected_consumer_payoff(p, Institution::Liability, {1, 5}, std_belief) == units(5));
  auto ia = BeliefModel::disclosed(Objective::InequityAverse);
  CHECK(expected_consumer_payoff(p, Institution::NoInstitution, {6, 8}, ia) == units(3));
  CHECK(expected_consumer_payoff(p, Institution::NoInstitution, {4, 8}, ia) == units(2));
  auto el = BeliefModel::disclosed(Objective::EfficiencyLoving);
  CHECK(expected_consumer_payoff(p, Institution::NoInstitution, {4, 8}, el) == units(2));
  CHECK(expected_consumer_payoff(p, Institution::Verifiability, {4, 8}, el) == units(4));
  CHECK_THROWS(expected_consumer_payoff(p, Institution::Liability, {6, 5}, std_belief));
}

TEST_CASE("standard belief without institutions ignores the low price") {
  MarketParams p;
  for (int hi = 1; hi <= 11; ++hi) {
    Ratio first = expected_consumer_payoff(p, Institution::NoInstitution, {1, hi},
                                           BeliefModel::standard());
    for (int lo = 1; lo <= hi; ++lo)
      CHECK(expected_consumer_payoff(p, Institution::NoInstitution, {lo, hi},
                                     BeliefModel::standard()) == first);
    if (hi > 1)
      CHECK(first < expected_consumer_payoff(p, Institution::NoInstitution, {1, hi - 1},
                                             BeliefModel::standard()));
  }
}

TEST_CASE("closed forms agree with the enumeration oracle") {
  MarketParams p;
  oracle::Game g;
  for (Institution inst : kInstitutions)
    for (PricePair pp : price_grid(p)) {
      auto oi = static_cast<oracle::Inst>(static_cast<int>(inst));
      CHECK(expected_consumer_payoff(p, inst, pp, BeliefModel::standard()) ==
            oracle::self_interest_value(g, oi, pp.low, pp.high, true) * 100);
      CHECK(expected_consumer_payoff(p, inst, pp, BeliefModel::skeptical()) ==
            oracle::self_interest_value(g, oi, pp.low, pp.high, false) * 100);
    }
}

TEST_CASE("disclosed objectives agree with their best responses") {
  MarketParams p;
  for (Objective o : {Objective::SelfInterested, Objective::InequityAverse,
                      Objective::EfficiencyLoving})
    for (Institution inst : kInstitutions)
      for (PricePair pp : price_grid(p))
        CHECK(expected_consumer_payoff(p, inst, pp, BeliefModel::disclosed(o)) ==
              expected_payoffs(p, inst, pp, o).consumer);
}

TEST_CASE("enum parsing") {
  CHECK(parse_institution("liability") == Institution::Liability);
  CHECK(parse_institution("verif") == Institution::Verifiability);
  CHECK(parse_objective("efficiency") == Objective::EfficiencyLoving);
  CHECK(parse_objective("NoObjective") == Objective::NoObjective);
  CHECK(parse_treatment("hct") == Treatment::HCT);
  CHECK(parse_tier("high") == Tier::High);
  CHECK_THROWS(parse_institution("court"));
}

}  // TEST_SUITE
