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

#include <cmath>
#include <map>

#include "credence/policy.hpp"
#include "doctest.h"

using namespace credence;

namespace {

const ExpertAction kLL{Treatment::LCT, Tier::Low};
const ExpertAction kLH{Treatment::LCT, Tier::High};
const ExpertAction kHH{Treatment::HCT, Tier::High};

std::vector<ExpertOffer> offers_of(std::vector<PricePair> prices) {
  std::vector<ExpertOffer> out;
  for (std::size_t i = 0; i < prices.size(); ++i) out.push_back({i, prices[i], false, {}});
  return out;
}

ExpertPlan plan_for(const ExpertPolicy& policy, Institution inst, std::size_t index = 0,
                    std::uint64_t seed = 1) {
  MarketParams params;
  RandomStream market(seed);
  return policy.decide(DecisionContext{params, inst, index, market});
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("rational action examples") {
  MarketParams p;
  CHECK(rational_action(Objective::SelfInterested, p, Institution::NoInstitution,
                        ProblemType::Big, {3, 7}) == kLH);
  CHECK(rational_action(Objective::EfficiencyLoving, p, Institution::NoInstitution,
                        ProblemType::Big, {3, 7}) == kHH);
  CHECK(rational_action(Objective::SelfInterested, p, Institution::Verifiability,
                        ProblemType::Big, {3, 7}) == kHH);
  CHECK(rational_action(Objective::InequityAverse, p, Institution::Liability,
                        ProblemType::Small, {6, 8}) == kLL);
  CHECK_THROWS(make_rational(Objective::NoObjective));
}

TEST_CASE("rational policy posts equilibrium prices") {
  auto pol = make_rational(Objective::SelfInterested);
  auto plan = plan_for(*pol, Institution::Verifiability);
  CHECK(plan.strategy.prices == PricePair{3, 7});
  CHECK(plan.strategy.slots.size() == 4);
  CHECK(plan.strategy.slots[0].small == kLL);
  CHECK(plan.strategy.slots[0].big == kHH);
  auto ia = make_rational(Objective::InequityAverse);
  CHECK(plan_for(*ia, Institution::Liability).strategy.prices == PricePair{6, 8});
}

TEST_CASE("scripted profiles") {
  auto ht = scripted_llm_profile(ScriptedSource::HumanTrained);
  CHECK(ht.prices_for(Institution::Verifiability) == PricePair{4, 8});
  CHECK(ht.actions_for(Institution::Verifiability, ProblemType::Big).probability_of(kLL) ==
        Ratio(1));
  CHECK(ht.actions_for(Institution::Verifiability, ProblemType::Small).probability_of(kLL) ==
        Ratio(1));

  auto nt = scripted_llm_profile(ScriptedSource::NoTraining);
  CHECK(nt.prices_for(Institution::NoInstitution) == PricePair{3, 5});
  CHECK(nt.prices_for(Institution::Verifiability) == PricePair{4, 7});
  CHECK(nt.prices_for(Institution::Liability) == PricePair{4, 8});

  auto ia = scripted_llm_profile(ScriptedSource::AIAI, Objective::InequityAverse);
  CHECK(ia.prices_for(Institution::Liability) == PricePair{4, 8});
  Ratio honest(0);
  for (ProblemType pt : kProblemTypes)
    for (const auto& [a, w] : ia.actions_for(Institution::Liability, pt).outcomes)
      if (a.tier == matching_tier(a.treatment)) honest += w * Ratio(1, 2);
  CHECK(honest == Ratio(49, 50));

  auto el = scripted_llm_profile(ScriptedSource::AIAI, Objective::EfficiencyLoving);
  CHECK(el.prices_for(Institution::Liability) == PricePair{4, 8});
  CHECK(el.actions_for(Institution::Liability, ProblemType::Small).probability_of(kLH) ==
        Ratio(23, 25));

  CHECK(scripted_llm_profile("AIAI:SelfInterested").prices_for(Institution::Liability) ==
        PricePair{4, 7});
  CHECK(scripted_llm_profile("humantrained").label == "HumanTrained");
  CHECK_THROWS_AS(scripted_llm_profile("GPT:unknown"), std::invalid_argument);
  CHECK_THROWS_AS(scripted_llm_profile("AIAI"), std::invalid_argument);
}

TEST_CASE("every scripted profile is legal and normalised") {
  MarketParams p;
  std::vector<ScriptedProfile> all = {scripted_llm_profile(ScriptedSource::NoTraining),
                                      scripted_llm_profile(ScriptedSource::AITrained),
                                      scripted_llm_profile(ScriptedSource::HumanTrained)};
  for (Objective o : kObjectives) {
    all.push_back(scripted_llm_profile(ScriptedSource::AIAI, o));
    all.push_back(scripted_llm_profile(ScriptedSource::HumanAIHuman, o));
  }
  for (const auto& prof : all) CHECK_NOTHROW(prof.validate(p));
}

TEST_CASE("behavioural mixture defaults") {
  auto spec = MixtureSpec::human_defaults();
  double total = 0.0, top = 0.0;
  for (const auto& [pp, w] : spec.price_distribution[0]) {
    total += w;
    if (pp == PricePair{4, 8}) top = w;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  // 17.30 over the nine listed shares (68.20).
  CHECK(top == doctest::Approx(17.30 / 68.20).epsilon(1e-12));
  CHECK_NOTHROW(behavioral_mixture(spec));
}

TEST_CASE("behavioural mixture validation") {
  MixtureSpec bad = MixtureSpec::human_defaults();
  bad.price_distribution[1][0].second += 0.01;
  CHECK_THROWS_AS(behavioral_mixture(bad), std::invalid_argument);
  MixtureSpec empty = MixtureSpec::human_defaults();
  empty.price_distribution[2].clear();
  CHECK_THROWS_AS(behavioral_mixture(empty), std::invalid_argument);
  MixtureSpec off = MixtureSpec::human_defaults();
  off.price_distribution[0] = {{{3, 12}, 1.0}};
  CHECK_THROWS_AS(behavioral_mixture(off), std::invalid_argument);
}

TEST_CASE("zero fraud mixture is honest, liability never undertreats") {
  MixtureSpec honest = MixtureSpec::human_defaults();
  honest.fraud = {};
  auto h = behavioral_mixture(honest);
  auto dishonest_spec = MixtureSpec::human_defaults();
  dishonest_spec.fraud = {0.9, 0.9, 0.9};
  auto d = behavioral_mixture(dishonest_spec);
  for (Institution inst : kInstitutions) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      auto plan = plan_for(*h, inst, 0, seed);
      for (const SlotRule& r : plan.strategy.slots) {
        CHECK(is_honest(ProblemType::Small, r.small));
        CHECK(is_honest(ProblemType::Big, r.big));
      }
      auto dp = plan_for(*d, inst, 0, seed);
      for (const SlotRule& r : dp.strategy.slots) {
        CHECK(is_legal(inst, ProblemType::Small, r.small));
        CHECK(is_legal(inst, ProblemType::Big, r.big));
        if (inst == Institution::Liability)
          CHECK_FALSE(classify_fraud(ProblemType::Big, r.big).has(FraudKind::Undertreatment));
      }
    }
  }
}

TEST_CASE("mixture draws are reproducible") {
  auto m = behavioral_mixture(MixtureSpec::human_defaults());
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    auto a = plan_for(*m, Institution::NoInstitution, 2, seed);
    auto b = plan_for(*m, Institution::NoInstitution, 2, seed);
    CHECK(a.strategy == b.strategy);
  }
}

TEST_CASE("mixture price frequencies follow the weights") {
  auto m = behavioral_mixture(MixtureSpec::human_defaults());
  int hits = 0;
  const int n = 20000;
  for (int s = 0; s < n; ++s)
    if (plan_for(*m, Institution::NoInstitution, 0, static_cast<std::uint64_t>(s))
            .strategy.prices == PricePair{4, 8})
      ++hits;
  double share = static_cast<double>(hits) / n;
  double expected = 17.30 / 68.20;
  double se = std::sqrt(expected * (1 - expected) / n);
  CHECK(std::fabs(share - expected) < 4 * se);
}

TEST_CASE("threshold consumer choices") {
  MarketParams p;
  auto t = make_threshold();
  RandomStream rng(3);
  auto offers = offers_of({{1, 3}, {2, 6}, {3, 7}, {4, 8}});
  CHECK(consumer_choose(*t, p, Institution::NoInstitution, offers, rng) ==
        ConsumerChoice::approach(0));
  auto same = offers_of({{4, 8}, {4, 8}, {4, 8}, {4, 8}});
  CHECK(consumer_choose(*t, p, Institution::NoInstitution, same, rng) ==
        ConsumerChoice::opt_out());
  std::vector<ExpertOffer> none;
  CHECK_THROWS(consumer_choose(*t, p, Institution::NoInstitution, none, rng));
}

TEST_CASE("indifferent consumers approach") {
  MarketParams p;
  p.outside_option = Money::from_units(2);
  auto t = make_threshold();
  RandomStream rng(3);
  CHECK(consumer_choose(*t, p, Institution::NoInstitution, offers_of({{1, 3}}), rng)
            .approached());
}

TEST_CASE("transparency-aware consumers believe disclosed objectives") {
  MarketParams p;
  auto ta = make_transparency_aware();
  RandomStream rng(3);
  std::vector<ExpertOffer> offers = {{0, {3, 5}, true, Objective::SelfInterested},
                                     {1, {4, 8}, true, Objective::EfficiencyLoving}};
  auto values = offer_values(*ta, p, Institution::NoInstitution, offers);
  CHECK(values[0] == Ratio(0));
  CHECK(values[1] == Ratio(200));
  CHECK(consumer_choose(*ta, p, Institution::NoInstitution, offers, rng) ==
        ConsumerChoice::approach(1));
}

TEST_CASE("uniform tie-break spreads over tied offers") {
  MarketParams p;
  auto t = make_threshold(BeliefModel::standard(), TieBreak::UniformRandom);
  auto offers = offers_of({{1, 3}, {2, 3}, {1, 9}});
  std::map<std::size_t, int> counts;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    RandomStream rng(s);
    auto c = consumer_choose(*t, p, Institution::NoInstitution, offers, rng);
    REQUIRE(c.approached());
    ++counts[*c.expert];
  }
  CHECK(counts.count(2) == 0);
  CHECK(counts[0] > 900);
  CHECK(counts[1] > 900);
  auto dist = consumer_choice_distribution(*t, p, Institution::NoInstitution, offers);
  REQUIRE(dist);
  CHECK((*dist)[0] == Ratio(1, 2));
  CHECK((*dist)[3] == Ratio(0));
}

TEST_CASE("threshold monotonicity") {
  MarketParams p;
  auto t = make_threshold();
  RandomStream rng(0);
  for (int hi = 11; hi >= 1; --hi) {
    auto before = consumer_choose(*t, p, Institution::Liability,
                                  offers_of({{1, hi}, {4, 9}}), rng);
    if (hi > 1 && before == ConsumerChoice::approach(0)) {
      auto after = consumer_choose(*t, p, Institution::Liability,
                                   offers_of({{1, hi - 1}, {4, 9}}), rng);
      CHECK(after == ConsumerChoice::approach(0));
    }
  }
}

TEST_CASE("trust consumers approach at the configured rate") {
  MarketParams p;
  auto tr = make_trust(human_trust_rates());
  auto offers = offers_of({{4, 8}, {4, 8}});
  int approached = 0;
  const int n = 20000;
  for (int s = 0; s < n; ++s) {
    RandomStream rng(static_cast<std::uint64_t>(s));
    if (consumer_choose(*tr, p, Institution::Liability, offers, rng).approached()) ++approached;
  }
  CHECK(static_cast<double>(approached) / n == doctest::Approx(0.80).epsilon(0.02));
  auto dist = consumer_choice_distribution(*tr, p, Institution::NoInstitution, offers);
  CHECK((*dist)[0] == Ratio(66, 100));
  CHECK(dist->back() == Ratio(34, 100));
}

TEST_CASE("delegation wrap") {
  auto human = make_fixed({2, 6}, SlotRule{kLL, kHH});
  auto llm_el = make_scripted(scripted_llm_profile(ScriptedSource::HumanAIHuman,
                                                   Objective::EfficiencyLoving));
  auto llm_si = make_scripted(scripted_llm_profile(ScriptedSource::HumanAIHuman,
                                                   Objective::SelfInterested));

  auto kept = delegation_wrap(human, {false, std::nullopt}, llm_el);
  auto kp = plan_for(*kept, Institution::NoInstitution);
  CHECK_FALSE(kp.delegated);
  CHECK(kp.strategy.prices == PricePair{2, 6});

  auto el = delegation_wrap(human, {true, Objective::EfficiencyLoving}, llm_el);
  auto ep = plan_for(*el, Institution::NoInstitution);
  CHECK(ep.delegated);
  CHECK(ep.llm_objective == Objective::EfficiencyLoving);
  CHECK(ep.strategy.prices == PricePair{4, 8});

  auto si = delegation_wrap(human, {true, Objective::SelfInterested}, llm_si);
  CHECK(plan_for(*si, Institution::NoInstitution).strategy.prices == PricePair{3, 5});

  CHECK_THROWS_AS(delegation_wrap(human, {true, Objective::InequityAverse}, llm_el),
                  std::invalid_argument);
  CHECK_THROWS_AS(delegation_wrap(human, {false, Objective::SelfInterested}, llm_si),
                  std::invalid_argument);
}

TEST_CASE("four objective prompts to choose from") {
  auto choices = objective_choices();
  CHECK(choices.size() == 4);
}

}  // TEST_SUITE
