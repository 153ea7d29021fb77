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
#include <cmath>
#include <numeric>

#include "credence/market.hpp"
#include "credence/metrics.hpp"
#include "credence/replication.hpp"
#include "doctest.h"

using namespace credence;

namespace {

const ExpertAction kLL{Treatment::LCT, Tier::Low};
const ExpertAction kLH{Treatment::LCT, Tier::High};
const ExpertAction kHH{Treatment::HCT, Tier::High};

MarketSetup uniform_setup(Institution inst, ExpertPolicyPtr expert,
                          ConsumerPolicyPtr consumer = make_threshold()) {
  MarketSetup s;
  s.institution = inst;
  s.experts.assign(4, expert);
  s.consumers.assign(4, consumer);
  return s;
}

MarketSetup aiai(Institution inst, Objective o) {
  return uniform_setup(inst, make_scripted(scripted_llm_profile(ScriptedSource::AIAI, o)));
}

Ratio units(std::int64_t u) { return Ratio(u * 100); }

}  // namespace

TEST_SUITE("market") {

TEST_CASE("scripted NoTraining experts under liability") {
  auto setup = uniform_setup(Institution::Liability,
                             make_scripted(scripted_llm_profile(ScriptedSource::NoTraining)));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto out = run_market(setup, RandomStream(seed));
    CHECK(out.optout_count == 0);
    for (Money m : out.consumer_payoffs) CHECK(m == Money::from_units(2));
    CHECK(out.choices[0] == ConsumerChoice::approach(0));
    Money revenue;
    for (std::size_t j = 0; j < 4; ++j)
      revenue += out.problems[j] == ProblemType::Big ? Money::from_units(2)
                                                     : Money::from_units(6);
    CHECK(out.expert_payoffs[0] == revenue);
  }
}

TEST_CASE("rational experts at the solver prices") {
  auto setup = uniform_setup(Institution::NoInstitution, make_rational(Objective::SelfInterested));
  auto out = run_market(setup, RandomStream(5));
  CHECK(out.offers[0].prices.high == 3);
  CHECK(out.optout_count == 0);
  for (std::size_t j = 0; j < 4; ++j)
    CHECK(out.consumer_payoffs[j] == (out.problems[j] == ProblemType::Big
                                          ? Money::from_units(-3)
                                          : Money::from_units(7)));
}

TEST_CASE("universal opt-out") {
  auto setup = uniform_setup(Institution::NoInstitution, make_fixed({4, 8}, {kLH, kLH}));
  auto out = run_market(setup, RandomStream(1));
  CHECK(out.optout_count == 4);
  Money total;
  for (Money m : out.consumer_payoffs) total += m;
  for (Money m : out.expert_payoffs) {
    CHECK(m == Money());
    total += m;
  }
  CHECK(total == Money::parse("6.4"));
}

TEST_CASE("illegal plans abort the market") {
  auto setup = uniform_setup(Institution::Liability, make_fixed({4, 8}, {kLL, kLH}));
  CHECK_THROWS_AS(run_market(setup, RandomStream(1)), MarketError);
  try {
    run_market(setup, RandomStream(1));
  } catch (const MarketError& e) {
    CHECK(std::string(e.what()).find("illegal") != std::string::npos);
  }
  auto bad_count = uniform_setup(Institution::Liability, make_fixed({4, 8}, {kLL, kHH}));
  bad_count.consumers.pop_back();
  CHECK_THROWS_AS(run_market(bad_count, RandomStream(1)), std::invalid_argument);
}

TEST_CASE("conservation and legality over mixed markets") {
  auto mix = behavioral_mixture(MixtureSpec::human_defaults());
  MarketParams params;
  for (Institution inst : kInstitutions) {
    MarketSetup s = uniform_setup(inst, mix, make_trust(human_trust_rates()));
    s.experts[1] = make_scripted(scripted_llm_profile(ScriptedSource::AIAI,
                                                      Objective::EfficiencyLoving));
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
      auto out = run_market(s, RandomStream(seed));
      Money lhs, rhs = params.outside_option * out.optout_count;
      for (Money m : out.consumer_payoffs) lhs += m;
      for (Money m : out.expert_payoffs) lhs += m;
      for (std::size_t j = 0; j < 4; ++j) {
        if (!out.actions[j]) continue;
        ExpertAction a = *out.actions[j];
        CHECK(is_legal(inst, out.problems[j], a));
        if (solves(a.treatment, out.problems[j])) rhs += params.value_solved;
        rhs -= params.cost(a.treatment);
        if (inst == Institution::Liability)
          CHECK_FALSE(out.fraud[j].has(FraudKind::Undertreatment));
      }
      CHECK(lhs == rhs);
    }
  }
}

TEST_CASE("choices do not depend on evaluation order") {
  MarketParams params;
  auto mix = behavioral_mixture(MixtureSpec::human_defaults());
  MarketSetup s = uniform_setup(Institution::Verifiability, mix);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto out = run_market(s, RandomStream(seed));
    std::vector<std::size_t> order = {3, 1, 0, 2};
    for (std::size_t j : order) {
      RandomStream rng = RandomStream(seed).child(kTagConsumer, j);
      CHECK(consumer_choose(*s.consumers[j], params, s.institution, out.offers, rng, j) ==
            out.choices[j]);
    }
  }
}

TEST_CASE("identical offers: all approach or all opt out") {
  for (Institution inst : kInstitutions)
    for (PricePair pp : price_grid(MarketParams{})) {
      SlotRule rule{kLL, kHH};
      auto out = run_market(uniform_setup(inst, make_fixed(pp, rule)), RandomStream(9));
      CHECK((out.optout_count == 0 || out.optout_count == 4));
    }
}

TEST_CASE("same seed gives the same market") {
  auto mix = behavioral_mixture(MixtureSpec::human_defaults());
  auto s = uniform_setup(Institution::NoInstitution, mix, make_trust(human_trust_rates()));
  auto a = run_market(s, RandomStream(42));
  auto b = run_market(s, RandomStream(42));
  CHECK(a.consumer_payoffs == b.consumer_payoffs);
  CHECK(a.expert_payoffs == b.expert_payoffs);
  CHECK(a.problems == b.problems);
  CHECK(a.strategies == b.strategies);
}

TEST_CASE("disclosure requires transparency and delegation") {
  auto human = make_fixed({2, 6}, {kLL, kHH});
  auto llm = make_scripted(scripted_llm_profile(ScriptedSource::HumanAIHuman,
                                                Objective::EfficiencyLoving));
  MarketSetup s = uniform_setup(Institution::NoInstitution, human);
  s.experts[2] = delegation_wrap(human, {true, Objective::EfficiencyLoving}, llm);
  auto opaque = run_market(s, RandomStream(1));
  for (const auto& o : opaque.offers) CHECK_FALSE(o.disclosed_objective.has_value());
  CHECK(opaque.offers[2].delegated);
  s.transparency = true;
  auto open = run_market(s, RandomStream(1));
  CHECK(open.offers[2].disclosed_objective == Objective::EfficiencyLoving);
  CHECK_FALSE(open.offers[0].disclosed_objective.has_value());
}

TEST_CASE("delegation mix keeps fixed objectives selfish") {
  auto human = make_fixed({2, 6}, {kLL, kHH});
  auto fixed = make_delegation_mix(human, Ratio(1), ObjectiveRegime::FixedSelfInterested, {});
  MarketSetup s = uniform_setup(Institution::NoInstitution, fixed);
  auto out = run_market(s, RandomStream(3));
  for (const auto& obj : out.llm_objectives) CHECK(obj == Objective::SelfInterested);
  for (const auto& o : out.offers) CHECK(o.prices == PricePair{3, 5});

  auto chosen = make_delegation_mix(
      human, Ratio(1, 2), ObjectiveRegime::ChosenObjective,
      {{Objective::SelfInterested, Ratio(2, 5)}, {Objective::EfficiencyLoving, Ratio(2, 5)},
       {Objective::InequityAverse, Ratio(1, 5)}});
  int delegated = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    auto o = run_market(uniform_setup(Institution::Liability, chosen), RandomStream(seed));
    for (const auto& offer : o.offers) {
      ++total;
      if (offer.delegated) ++delegated;
    }
  }
  CHECK(static_cast<double>(delegated) / total == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("closed-form liability cells of the AI-AI objective grid") {
  struct Cell {
    Objective o;
    Ratio consumer, expert;
  };
  for (const Cell& c : {Cell{Objective::NoObjective, units(12), units(12)},
                        Cell{Objective::SelfInterested, units(12), units(12)},
                        Cell{Objective::InequityAverse, Ratio(1568), Ratio(832)},
                        Cell{Objective::EfficiencyLoving, Ratio(864), Ratio(1536)}}) {
    auto m = expected_market(aiai(Institution::Liability, c.o));
    REQUIRE(m);
    CHECK(m->consumer_surplus == c.consumer);
    CHECK(m->expert_surplus == c.expert);
    CHECK(m->approach_rate == Ratio(1));
  }
  auto ia = expected_market(aiai(Institution::Liability, Objective::InequityAverse));
  CHECK(ia->delta() == Ratio(736));
  CHECK(ia->efficiency() == Ratio(1));
}

TEST_CASE("closed-form opt-out cells") {
  for (Institution inst : {Institution::NoInstitution, Institution::Verifiability})
    for (Objective o : {Objective::NoObjective, Objective::SelfInterested,
                        Objective::InequityAverse}) {
      auto m = expected_market(aiai(inst, o));
      REQUIRE(m);
      CHECK(m->consumer_surplus == Ratio(640));
      CHECK(m->expert_surplus == Ratio(0));
      CHECK(m->efficiency() == Ratio(640, 2400));
    }
  // Equal markups at (4, 8) under Verifiability make an honest expert worth
  // approaching: 10 - 4 - 0.5 * 4 = 4 >= 1.6.
  auto el = expected_market(aiai(Institution::Verifiability, Objective::EfficiencyLoving));
  CHECK(el->approach_rate == Ratio(1));
  auto skeptic = aiai(Institution::Verifiability, Objective::EfficiencyLoving);
  skeptic.consumers.assign(4, make_threshold(BeliefModel::skeptical()));
  CHECK(expected_market(skeptic)->approach_rate == Ratio(0));
}

}  // TEST_SUITE

TEST_SUITE("metrics") {

TEST_CASE("relative efficiency examples") {
  MarketParams p;
  auto ni = expected_market(uniform_setup(Institution::NoInstitution,
                                          make_rational(Objective::SelfInterested)));
  CHECK(ni->consumer_surplus + ni->expert_surplus == units(12));
  CHECK(ni->efficiency() == Ratio(1, 2));
  auto si = expected_market(aiai(Institution::Liability, Objective::SelfInterested));
  CHECK(si->efficiency() == Ratio(1));
  CHECK(expected_max_income_per_consumer(p) * 4 == units(24));

  auto out = run_market(uniform_setup(Institution::NoInstitution,
                                      make_fixed({4, 8}, {kLH, kLH})),
                        RandomStream(1));
  Ratio eff = relative_efficiency(out, p);
  CHECK(eff <= Ratio(1));
  int big = static_cast<int>(std::count(out.problems.begin(), out.problems.end(),
                                        ProblemType::Big));
  CHECK(eff == Ratio(640, 400 * big + 800 * (4 - big)));
}

TEST_CASE("surplus split") {
  auto out = run_market(uniform_setup(Institution::NoInstitution,
                                      make_fixed({4, 8}, {kLH, kLH})),
                        RandomStream(1));
  auto g = surplus_split(out, SurplusMode::GroupTotal);
  CHECK(g.consumer == Ratio(640));
  CHECK(g.expert == Ratio(0));
  CHECK(g.delta == Ratio(640));
  auto pc = surplus_split(out, SurplusMode::PerCapita);
  CHECK(pc.consumer == Ratio(160));

  MarketParams one;
  one.n_experts = 1;
  one.n_consumers = 1;
  one.prob_big = Ratio(0);
  MarketSetup s;
  s.params = one;
  s.experts = {make_fixed({3, 7}, {kLL, kHH})};
  s.consumers = {make_threshold()};
  auto single = surplus_split(run_market(s, RandomStream(2)), SurplusMode::GroupTotal);
  CHECK(single.consumer == units(7));
  CHECK(single.expert == units(1));
  CHECK(single.delta == units(6));
}

TEST_CASE("efficiency is invariant to relabelling") {
  MarketParams p;
  auto mix = behavioral_mixture(MixtureSpec::human_defaults());
  auto out = run_market(uniform_setup(Institution::NoInstitution, mix), RandomStream(4));
  MarketOutcome perm = out;
  std::reverse(perm.consumer_payoffs.begin(), perm.consumer_payoffs.end());
  std::reverse(perm.problems.begin(), perm.problems.end());
  std::reverse(perm.expert_payoffs.begin(), perm.expert_payoffs.end());
  CHECK(relative_efficiency(perm, p) == relative_efficiency(out, p));
}

TEST_CASE("fraud rates for NoTraining without institutions") {
  MarketParams p;
  MarketTally t;
  auto setup = uniform_setup(Institution::NoInstitution,
                             make_scripted(scripted_llm_profile(ScriptedSource::NoTraining)),
                             make_threshold());
  // (3, 5) is not worth approaching under standard beliefs; force approaches.
  setup.consumers.assign(4, make_trust({Ratio(1), Ratio(1), Ratio(1)}));
  for (std::uint64_t s = 0; s < 200; ++s) t.add(run_market(setup, RandomStream(s)), p);
  auto f = fraud_rates(t);
  CHECK(f.conditional[FraudKind::Overcharging] == 1.0);
  CHECK(f.conditional[FraudKind::Undertreatment] == 1.0);
  CHECK(f.conditional[FraudKind::Overtreatment] == 0.0);
  CHECK(f.expert_any > 0.9);
}

TEST_CASE("honest mixtures report no fraud; liability has no undertreatment") {
  MarketParams p;
  MixtureSpec honest = MixtureSpec::human_defaults();
  honest.fraud = {};
  MarketTally t, lt;
  auto trust = make_trust({Ratio(1), Ratio(1), Ratio(1)});
  for (std::uint64_t s = 0; s < 200; ++s) {
    t.add(run_market(uniform_setup(Institution::NoInstitution, behavioral_mixture(honest), trust),
                     RandomStream(s)),
          p);
    lt.add(run_market(uniform_setup(Institution::Liability,
                                    behavioral_mixture(MixtureSpec::human_defaults()), trust),
                      RandomStream(s)),
           p);
  }
  auto f = fraud_rates(t);
  for (FraudKind k : kFraudKinds) {
    CHECK(f.per_decision[k] == 0.0);
    CHECK(f.per_slot[k] == 0.0);
  }
  CHECK(f.expert_any == 0.0);
  CHECK(fraud_rates(lt).per_decision[FraudKind::Undertreatment] == 0.0);
  CHECK(fraud_rates(lt).per_slot[FraudKind::Undertreatment] == 0.0);
}

TEST_CASE("at-least-one fraud share matches simulation") {
  CHECK(expert_any_fraud_probability(0.086, 4) == doctest::Approx(0.3018).epsilon(1e-3));
  // Only undertreatment, only on big problems: per slot probability 0.086 * h.
  MarketParams p;
  MixtureSpec spec = MixtureSpec::human_defaults();
  spec.fraud = {0.086, 0.0, 0.0};
  auto mix = behavioral_mixture(spec);
  MarketTally t;
  for (std::uint64_t s = 0; s < 20000; ++s)
    t.add(run_market(uniform_setup(Institution::NoInstitution, mix), RandomStream(s)), p);
  double share = static_cast<double>(t.experts_any_fraud) / static_cast<double>(t.experts);
  double expected = expert_any_fraud_probability(0.086 * 0.5, 4);
  double se = std::sqrt(expected * (1 - expected) / static_cast<double>(t.experts));
  CHECK(std::fabs(share - expected) < 4 * se);
}

TEST_CASE("metric set invariants and modes") {
  MarketParams p;
  auto report = run_replications(aiai(Institution::Liability, Objective::SelfInterested), 200, 7);
  auto m = report.metrics(p);
  CHECK(m.delta == m.consumer_surplus - m.expert_surplus);
  CHECK(m.approach_rate == 1.0);
  CHECK(m.relative_efficiency == doctest::Approx(1.0));
  auto pc = report.metrics(p, SurplusMode::PerCapita, EfficiencyMode::ExpectedDenominator);
  CHECK(pc.consumer_surplus == m.consumer_surplus / 4);
  // Realized income over the expected maximum; only close to 1 on average.
  CHECK(pc.relative_efficiency == doctest::Approx(1.0).epsilon(0.05));
  CHECK(m.objective_attraction.at("own") == 1.0);
  CHECK_THROWS(compute_metrics(MarketTally{}, p));
  CHECK(parse_surplus_mode("per-capita") == SurplusMode::PerCapita);
  CHECK(parse_efficiency_mode("expected") == EfficiencyMode::ExpectedDenominator);
  CHECK_THROWS(parse_surplus_mode("mean"));
}

}  // TEST_SUITE

TEST_SUITE("replication") {

TEST_CASE("deterministic and thread-count independent") {
  auto mix = behavioral_mixture(MixtureSpec::human_defaults());
  auto s = uniform_setup(Institution::Verifiability, mix, make_trust(human_trust_rates()));
  ReplicationOptions one{1, true}, many{3, true};
  auto a = run_replications(s, 300, 11, one);
  auto b = run_replications(s, 300, 11, many);
  CHECK(a.tally == b.tally);
  REQUIRE(a.digests.size() == 300);
  CHECK(a.digests[17].consumer_payoffs == b.digests[17].consumer_payoffs);

  MarketTally re;
  for (const auto& d : a.digests) re.add(d, s.params);
  CHECK(re == a.tally);

  auto c = run_replications(s, 1, 5);
  auto d = run_replications(s, 1, 5);
  CHECK(c.tally == d.tally);
  CHECK_THROWS(run_replications(s, 0, 5));
}

TEST_CASE("errors carry the replicate index") {
  auto s = uniform_setup(Institution::Liability, make_fixed({4, 8}, {kLL, kLH}));
  try {
    run_replications(s, 5, 1, {1, false});
    FAIL("expected failure");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).rfind("replicate 0:", 0) == 0);
  }
}

TEST_CASE("Monte Carlo converges on the liability cells") {
  MarketParams p;
  struct Cell {
    Objective o;
    double consumer, expert;
  };
  for (const Cell& c : {Cell{Objective::InequityAverse, 15.68, 8.32},
                        Cell{Objective::EfficiencyLoving, 8.64, 15.36}}) {
    auto m = run_replications(aiai(Institution::Liability, c.o), 10000, 2026).metrics(p);
    CHECK(std::fabs(cents_to_double(m.consumer_surplus) - c.consumer) < 0.15);
    CHECK(std::fabs(cents_to_double(m.expert_surplus) - c.expert) < 0.15);
  }
}

}  // TEST_SUITE
