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

// Expert and consumer decision policies.
//
// An ExpertPolicy produces, once per market, a posted price pair together
// with a strategy-method plan: one action per (consumer slot, problem type).
// A ConsumerPolicy picks an expert (or the outside option) from the posted
// offers. Policies are immutable; all randomness comes from the stream the
// caller hands in.

#ifndef CREDENCE_POLICY_HPP_
#define CREDENCE_POLICY_HPP_

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "credence/core.hpp"
#include "credence/rng.hpp"

namespace credence {

// Actions for one strategy-method slot, one per problem type.
struct SlotRule {
  ExpertAction small;
  ExpertAction big;

  ExpertAction for_problem(ProblemType p) const {
    return p == ProblemType::Small ? small : big;
  }
  friend bool operator==(const SlotRule&, const SlotRule&) = default;
};

struct ExpertStrategy {
  PricePair prices;
  std::vector<SlotRule> slots;  // one per consumer position
  friend bool operator==(const ExpertStrategy&, const ExpertStrategy&) = default;
};

// Finite distribution over actions; probabilities are exact and sum to 1.
struct ActionDistribution {
  std::vector<std::pair<ExpertAction, Ratio>> outcomes;

  static ActionDistribution point(ExpertAction a) { return {{{a, Ratio(1)}}}; }
  // Throws std::invalid_argument unless probabilities are in [0,1] and sum to 1.
  void validate() const;
  ExpertAction sample(RandomStream& rng) const;
  Ratio probability_of(ExpertAction a) const;
};

// What a consumer sees about one expert.
struct ExpertOffer {
  std::size_t expert_index = 0;
  PricePair prices;
  bool delegated = false;
  std::optional<Objective> disclosed_objective;
};

// ---------------------------------------------------------------------------
// Scripted LLM profiles.

enum class ScriptedSource {
  AIAI,          // AI-AI markets, by prompted objective
  NoTraining,    // Human-AI markets, self-interested prompt
  AITrained,
  HumanTrained,
  HumanAIHuman,  // delegated LLM in Human-AI-Human markets, by objective
};

struct ScriptedProfile {
  std::string label;
  Objective objective = Objective::SelfInterested;
  std::array<PricePair, 3> prices;                             // by institution
  std::array<std::array<ActionDistribution, 2>, 3> actions;  // [institution][problem]

  PricePair prices_for(Institution i) const {
    return prices[static_cast<std::size_t>(i)];
  }
  const ActionDistribution& actions_for(Institution i, ProblemType p) const {
    return actions[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
  }
  void validate(const MarketParams& params) const;
};

ScriptedProfile scripted_llm_profile(ScriptedSource source,
                                     Objective objective = Objective::SelfInterested);
// Labels: "AIAI:<objective>", "NoTraining", "AITrained", "HumanTrained",
// "HumanAIHuman:<objective>". Throws std::invalid_argument otherwise.
ScriptedProfile scripted_llm_profile(std::string_view label);

// ---------------------------------------------------------------------------
// Behavioural mixtures.

struct FraudPropensity {
  double undertreatment = 0.0;  // LCT on a big problem
  double overtreatment = 0.0;   // HCT on a small problem
  double overcharging = 0.0;    // high price with LCT
};

struct MixtureSpec {
  // Weighted price pairs per institution; each list must sum to 1 (1e-9).
  std::array<std::vector<std::pair<PricePair, double>>, 3> price_distribution;
  FraudPropensity fraud;

  // Most frequent human price pairs per institution, renormalized, with
  // per-slot fraud propensities matching about 30% of experts defrauding at
  // least one of four consumers.
  static MixtureSpec human_defaults();
};

// ---------------------------------------------------------------------------
// Replay of ingested human records.

struct ExpertRecord {
  std::string subject_id;
  Institution institution = Institution::NoInstitution;
  PricePair prices;
  SlotRule rule;
  bool delegated = false;
  std::optional<Objective> chosen_objective;
};

struct ConsumerRecord {
  std::string subject_id;
  Institution institution = Institution::NoInstitution;
  std::optional<std::size_t> approach;  // expert position, nullopt = opt out
};

struct ReplayPool {
  std::string name;
  std::vector<ExpertRecord> experts;
  std::vector<ConsumerRecord> consumers;

  std::vector<const ExpertRecord*> experts_in(Institution i) const;
  std::vector<const ConsumerRecord*> consumers_in(Institution i) const;
};

// ---------------------------------------------------------------------------
// Expert policies.

class ExpertPolicy;
using ExpertPolicyPtr = std::shared_ptr<const ExpertPolicy>;

struct DecisionContext {
  const MarketParams& params;
  Institution institution;
  std::size_t index;            // position among experts (or consumers)
  const RandomStream& market;   // replicate-level stream
};

struct ExpertPlan {
  ExpertStrategy strategy;
  bool delegated = false;
  std::optional<Objective> llm_objective;  // objective of the acting LLM
};

// Deterministic-price plan with per-problem action distributions shared by
// all slots; used by closed-form evaluation.
struct AnalyticPlan {
  PricePair prices;
  bool delegated = false;
  std::optional<Objective> llm_objective;
  std::array<ActionDistribution, 2> actions;
};

struct DelegationChoice {
  bool delegated = false;
  std::optional<Objective> chosen_objective;  // set => delegated
};

enum class ObjectiveRegime { FixedSelfInterested, ChosenObjective };

class ExpertPolicy {
 public:
  struct Rational {
    Objective objective;
    std::optional<PricePair> prices;  // default: the solver's equilibrium prices
  };
  struct Fixed {
    PricePair prices;
    SlotRule rule;
  };
  struct Mixture {
    std::array<std::vector<PricePair>, 3> pairs;
    std::array<std::vector<Ratio>, 3> weights;
    FraudPropensity fraud;
  };
  struct Replay {
    std::shared_ptr<const ReplayPool> pool;
  };
  // A complete strategy fixed in advance: a human submission or the
  // decisions of a live LLM agent.
  struct Planned {
    ExpertStrategy strategy;
  };
  struct Delegated {
    ExpertPolicyPtr acting;
    bool delegated;
    std::optional<Objective> objective;
  };
  // Samples a delegation decision (and, under ChosenObjective, an objective)
  // once per market.
  struct DelegationMix {
    ExpertPolicyPtr human;
    Ratio delegation_rate;
    ObjectiveRegime regime;
    std::vector<std::pair<Objective, Ratio>> objective_shares;
  };
  using Spec = std::variant<Rational, ScriptedProfile, Fixed, Mixture, Replay,
                            Planned, Delegated, DelegationMix>;

  ExpertPolicy(std::string id, Spec spec);

  const std::string& id() const { return id_; }
  const Spec& spec() const { return spec_; }
  // The objective the policy acts on, when it has one.
  std::optional<Objective> objective() const;

  ExpertPlan decide(const DecisionContext& ctx) const;
  // nullopt when prices or actions are not representable in closed form.
  std::optional<AnalyticPlan> analytic_plan(const MarketParams& params,
                                            Institution inst) const;

 private:
  std::string id_;
  Spec spec_;
};

ExpertPolicyPtr make_rational(Objective objective,
                              std::optional<PricePair> prices = std::nullopt);
ExpertPolicyPtr make_scripted(ScriptedProfile profile);
ExpertPolicyPtr make_fixed(PricePair prices, SlotRule rule);
ExpertPolicyPtr make_replay_expert(std::shared_ptr<const ReplayPool> pool);
ExpertPolicyPtr make_planned(ExpertStrategy strategy, std::string id = "planned");
ExpertPolicyPtr make_delegation_mix(ExpertPolicyPtr human, Ratio delegation_rate,
                                    ObjectiveRegime regime,
                                    std::vector<std::pair<Objective, Ratio>> shares);

// Best response for an expert with a well-defined objective.
ExpertAction rational_action(Objective objective, const MarketParams& params,
                             Institution inst, ProblemType problem,
                             PricePair prices);

// Throws std::invalid_argument if any price distribution is empty, has
// invalid pairs, negative weights or does not sum to 1 within 1e-9.
ExpertPolicyPtr behavioral_mixture(const MixtureSpec& spec,
                                   const MarketParams& params = {});

// Returns `llm` when delegated, `inner_human` otherwise, tagged with the
// delegation flag. Throws std::invalid_argument if a chosen objective does
// not match the LLM policy's objective, or is set without delegation.
ExpertPolicyPtr delegation_wrap(ExpertPolicyPtr inner_human,
                                const DelegationChoice& delegation,
                                ExpertPolicyPtr llm);

// ---------------------------------------------------------------------------
// Consumer policies.

enum class TieBreak { LowestIndex, UniformRandom };

class ConsumerPolicy {
 public:
  struct Threshold {
    BeliefModel belief;
  };
  struct Trust {
    std::array<Ratio, 3> approach_rate;  // by institution
    BeliefModel belief;
  };
  // Threshold that believes disclosed objectives and falls back otherwise.
  struct TransparencyAware {
    BeliefModel fallback;
  };
  struct Replay {
    std::shared_ptr<const ReplayPool> pool;
  };
  // A choice made outside the engine, e.g. by a human in a live session.
  // Expert positions beyond the offer list are rejected at choice time.
  struct Fixed {
    std::optional<std::size_t> expert;
  };
  using Spec = std::variant<Threshold, Trust, TransparencyAware, Replay, Fixed>;

  ConsumerPolicy(std::string id, Spec spec, TieBreak tie_break = TieBreak::LowestIndex);
  const std::string& id() const { return id_; }
  const Spec& spec() const { return spec_; }
  TieBreak tie_break() const { return tie_break_; }

 private:
  std::string id_;
  Spec spec_;
  TieBreak tie_break_;
};

using ConsumerPolicyPtr = std::shared_ptr<const ConsumerPolicy>;

ConsumerPolicyPtr make_threshold(BeliefModel belief = BeliefModel::standard(),
                                 TieBreak tie = TieBreak::LowestIndex);
ConsumerPolicyPtr make_trust(std::array<Ratio, 3> rates,
                             BeliefModel belief = BeliefModel::standard(),
                             TieBreak tie = TieBreak::LowestIndex);
ConsumerPolicyPtr make_transparency_aware(TieBreak tie = TieBreak::LowestIndex);
ConsumerPolicyPtr make_replay_consumer(std::shared_ptr<const ReplayPool> pool);
// nullopt opts out.
ConsumerPolicyPtr make_fixed_choice(std::optional<std::size_t> expert);

// Default trust rates observed in human markets: 0.66 / 0.66 / 0.80.
std::array<Ratio, 3> human_trust_rates();

struct ConsumerChoice {
  std::optional<std::size_t> expert;  // position in the offer list

  static ConsumerChoice opt_out() { return {}; }
  static ConsumerChoice approach(std::size_t i) { return {i}; }
  bool approached() const { return expert.has_value(); }
  friend bool operator==(const ConsumerChoice&, const ConsumerChoice&) = default;
};

// Expected payoff the policy assigns to each offer (cents).
std::vector<Ratio> offer_values(const ConsumerPolicy& policy,
                                const MarketParams& params, Institution inst,
                                std::span<const ExpertOffer> offers);

// `ctx.index` is the consumer position, used by replay policies. Throws
// std::invalid_argument for empty offers.
ConsumerChoice consumer_choose(const ConsumerPolicy& policy,
                               const MarketParams& params, Institution inst,
                               std::span<const ExpertOffer> offers,
                               RandomStream& rng, std::size_t consumer_index = 0,
                               const RandomStream* market = nullptr);

// Exact choice probabilities: offers.size() entries followed by opt-out.
// nullopt for replay consumers.
std::optional<std::vector<Ratio>> consumer_choice_distribution(
    const ConsumerPolicy& policy, const MarketParams& params, Institution inst,
    std::span<const ExpertOffer> offers);

// The four objective prompts an expert may choose from.
std::array<Objective, 4> objective_choices();

}  // namespace credence

#endif  // CREDENCE_POLICY_HPP_
