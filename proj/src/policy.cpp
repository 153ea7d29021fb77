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

#include "credence/policy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include "credence/equilibrium.hpp"

namespace credence {

namespace {

// The solver is pure, so its price choice is memoised per parameter set.
PricePair solver_prices(const MarketParams& p, Institution inst, Objective obj) {
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t, std::int64_t,
                         std::int64_t, std::int64_t, int, int, int, int, int, int>;
  static std::mutex mu;
  static std::map<Key, PricePair> cache;
  Key key{p.value_solved.cents(), p.outside_option.cents(), p.prob_big.numerator(),
          p.prob_big.denominator(), p.cost_low.cents(), p.cost_high.cents(),
          p.price_min, p.price_max, p.n_experts, p.n_consumers,
          static_cast<int>(inst), static_cast<int>(obj)};
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  PricePair prices =
      solve_prediction(p, inst, obj, obj != Objective::SelfInterested).representative;
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, prices);
  return prices;
}

constexpr std::size_t idx(Institution i) { return static_cast<std::size_t>(i); }
constexpr std::size_t idx(ProblemType p) { return static_cast<std::size_t>(p); }

constexpr ExpertAction kLctLow{Treatment::LCT, Tier::Low};
constexpr ExpertAction kLctHigh{Treatment::LCT, Tier::High};
constexpr ExpertAction kHctHigh{Treatment::HCT, Tier::High};

ActionDistribution point(ExpertAction a) { return ActionDistribution::point(a); }

ActionDistribution mix(ExpertAction a, Ratio pa, ExpertAction b) {
  return {{{a, pa}, {b, Ratio(1) - pa}}};
}

using InstActions = std::array<ActionDistribution, 2>;  // [Small, Big]

InstActions same(ExpertAction small, ExpertAction big) { return {point(small), point(big)}; }

// Human-AI decision pattern shared by the trained and untrained profiles.
std::array<InstActions, 3> human_ai_actions() {
  return {same(kLctHigh, kLctHigh), same(kLctLow, kLctLow), same(kLctHigh, kHctHigh)};
}

std::array<InstActions, 3> ai_ai_actions(Objective o) {
  switch (o) {
    case Objective::NoObjective:
    case Objective::SelfInterested:
      return {same(kLctHigh, kLctHigh), same(kLctLow, kLctLow),
              same(kLctHigh, kHctHigh)};
    case Objective::InequityAverse:
      return {same(kLctLow, kHctHigh),
              InstActions{point(kLctLow), mix(kLctLow, Ratio(1, 2), kHctHigh)},
              InstActions{mix(kLctHigh, Ratio(1, 25), kLctLow), point(kHctHigh)}};
    case Objective::EfficiencyLoving:
      return {same(kLctLow, kHctHigh), same(kLctLow, kHctHigh),
              InstActions{mix(kLctHigh, Ratio(23, 25), kLctLow), point(kHctHigh)}};
  }
  throw std::invalid_argument("unknown objective");
}

std::array<PricePair, 3> ai_ai_prices(Objective o) {
  switch (o) {
    case Objective::NoObjective: return {PricePair{4, 5}, PricePair{4, 7}, PricePair{5, 7}};
    case Objective::SelfInterested: return {PricePair{5, 8}, PricePair{5, 5}, PricePair{4, 7}};
    case Objective::InequityAverse: return {PricePair{6, 8}, PricePair{5, 5}, PricePair{4, 8}};
    case Objective::EfficiencyLoving: return {PricePair{4, 8}, PricePair{4, 8}, PricePair{4, 8}};
  }
  throw std::invalid_argument("unknown objective");
}

std::array<PricePair, 3> human_ai_human_prices(Objective o) {
  switch (o) {
    case Objective::NoObjective: return ai_ai_prices(o);
    case Objective::SelfInterested: return {PricePair{3, 5}, PricePair{4, 7}, PricePair{4, 8}};
    case Objective::InequityAverse:
    case Objective::EfficiencyLoving:
      return {PricePair{4, 8}, PricePair{4, 8}, PricePair{4, 8}};
  }
  throw std::invalid_argument("unknown objective");
}

Ratio to_ratio_checked(double w, const char* what) {
  if (!std::isfinite(w) || w < 0.0 || w > 1.0 + 1e-9)
    throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
  return probability_from_double(std::min(w, 1.0));
}

RandomStream expert_stream(const DecisionContext& ctx) {
  return ctx.market.child(kTagExpert, ctx.index);
}

ExpertStrategy uniform_strategy(const MarketParams& params, PricePair prices,
                                SlotRule rule) {
  return {prices, std::vector<SlotRule>(static_cast<std::size_t>(params.n_consumers), rule)};
}

ExpertStrategy sample_strategy(const MarketParams& params, PricePair prices,
                               const InstActions& actions, RandomStream& rng) {
  ExpertStrategy s{prices, {}};
  for (int slot = 0; slot < params.n_consumers; ++slot) {
    SlotRule r;
    r.small = actions[idx(ProblemType::Small)].sample(rng);
    r.big = actions[idx(ProblemType::Big)].sample(rng);
    s.slots.push_back(r);
  }
  return s;
}

ExpertAction mixture_action(Institution inst, ProblemType problem,
                            const std::array<Ratio, 3>& fraud, RandomStream& rng) {
  Treatment t = sufficient_treatment(problem);
  if (problem == ProblemType::Big &&
      is_legal(inst, problem, {Treatment::LCT, Tier::Low}) && rng.bernoulli(fraud[0]))
    t = Treatment::LCT;
  if (problem == ProblemType::Small &&
      is_legal(inst, problem, {Treatment::HCT, Tier::High}) && rng.bernoulli(fraud[1]))
    t = Treatment::HCT;
  Tier tier = matching_tier(t);
  if (t == Treatment::LCT && is_legal(inst, problem, kLctHigh) && rng.bernoulli(fraud[2]))
    tier = Tier::High;
  return {t, tier};
}

const ExpertRecord& replay_expert_row(const ReplayPool& pool, const DecisionContext& ctx) {
  std::vector<const ExpertRecord*> rows = pool.experts_in(ctx.institution);
  if (rows.size() < static_cast<std::size_t>(ctx.params.n_experts))
    throw std::runtime_error("replay pool '" + pool.name + "' has " +
                             std::to_string(rows.size()) + " expert rows for " +
                             std::string(to_string(ctx.institution)) + ", need " +
                             std::to_string(ctx.params.n_experts));
  std::vector<std::size_t> perm = ctx.market.child("replay-expert").permutation(rows.size());
  return *rows[perm[ctx.index]];
}

}  // namespace

// ---------------------------------------------------------------------------

void ActionDistribution::validate() const {
  if (outcomes.empty()) throw std::invalid_argument("empty action distribution");
  Ratio total(0);
  for (const auto& [a, p] : outcomes) {
    if (p < 0 || p > 1) throw std::invalid_argument("action probability outside [0, 1]");
    total += p;
  }
  if (total != 1) throw std::invalid_argument("action probabilities do not sum to 1");
}

ExpertAction ActionDistribution::sample(RandomStream& rng) const {
  if (outcomes.size() == 1) return outcomes.front().first;
  std::vector<Ratio> w;
  w.reserve(outcomes.size());
  for (const auto& o : outcomes) w.push_back(o.second);
  return outcomes[rng.weighted_index(w)].first;
}

Ratio ActionDistribution::probability_of(ExpertAction a) const {
  Ratio p(0);
  for (const auto& o : outcomes)
    if (o.first == a) p += o.second;
  return p;
}

void ScriptedProfile::validate(const MarketParams& params) const {
  for (Institution inst : kInstitutions) {
    validate_prices(params, prices_for(inst));
    for (ProblemType p : kProblemTypes) {
      const ActionDistribution& d = actions_for(inst, p);
      d.validate();
      for (const auto& [a, w] : d.outcomes)
        if (w > 0 && !is_legal(inst, p, a))
          throw std::invalid_argument("profile '" + label + "' plays illegal " +
                                      a.to_string() + " under " +
                                      std::string(to_string(inst)));
    }
  }
}

ScriptedProfile scripted_llm_profile(ScriptedSource source, Objective objective) {
  ScriptedProfile p;
  p.objective = Objective::SelfInterested;
  switch (source) {
    case ScriptedSource::AIAI:
      p.label = "AIAI:" + std::string(to_string(objective));
      p.objective = objective;
      p.prices = ai_ai_prices(objective);
      p.actions = ai_ai_actions(objective);
      break;
    case ScriptedSource::HumanAIHuman:
      p.label = "HumanAIHuman:" + std::string(to_string(objective));
      p.objective = objective;
      p.prices = human_ai_human_prices(objective);
      p.actions = ai_ai_actions(objective);
      break;
    case ScriptedSource::NoTraining:
      p.label = "NoTraining";
      p.prices = {PricePair{3, 5}, PricePair{4, 7}, PricePair{4, 8}};
      p.actions = human_ai_actions();
      break;
    case ScriptedSource::AITrained:
      p.label = "AITrained";
      p.prices = {PricePair{4, 7}, PricePair{4, 4}, PricePair{3, 6}};
      p.actions = human_ai_actions();
      break;
    case ScriptedSource::HumanTrained:
      p.label = "HumanTrained";
      p.prices = {PricePair{3, 7}, PricePair{4, 8}, PricePair{4, 8}};
      p.actions = human_ai_actions();
      break;
  }
  return p;
}

ScriptedProfile scripted_llm_profile(std::string_view label) {
  std::string s(label);
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  auto colon = lower.find(':');
  std::string head = lower.substr(0, colon);
  std::string tail = colon == std::string::npos ? "" : s.substr(colon + 1);
  auto objective_of = [&]() {
    if (tail.empty()) throw std::invalid_argument("profile '" + s + "' needs ':<objective>'");
    return parse_objective(tail);
  };
  if (head == "aiai" || head == "ai-ai") return scripted_llm_profile(ScriptedSource::AIAI, objective_of());
  if (head == "humanaihuman" || head == "human-ai-human")
    return scripted_llm_profile(ScriptedSource::HumanAIHuman, objective_of());
  if (colon == std::string::npos) {
    if (head == "notraining") return scripted_llm_profile(ScriptedSource::NoTraining);
    if (head == "aitrained") return scripted_llm_profile(ScriptedSource::AITrained);
    if (head == "humantrained") return scripted_llm_profile(ScriptedSource::HumanTrained);
  }
  throw std::invalid_argument("unknown scripted profile '" + s + "'");
}

// ---------------------------------------------------------------------------

MixtureSpec MixtureSpec::human_defaults() {
  MixtureSpec spec;
  auto fill = [](std::vector<std::pair<PricePair, double>> rows) {
    double total = 0.0;
    for (const auto& r : rows) total += r.second;
    for (auto& r : rows) r.second /= total;
    return rows;
  };
  spec.price_distribution[idx(Institution::NoInstitution)] =
      fill({{{4, 8}, 17.30}, {{3, 7}, 14.75}, {{2, 6}, 14.59}, {{5, 8}, 4.67},
            {{3, 6}, 3.93}, {{5, 10}, 3.77}, {{4, 7}, 3.20}, {{5, 7}, 3.20},
            {{6, 8}, 2.79}});
  spec.price_distribution[idx(Institution::Verifiability)] =
      fill({{{2, 6}, 15.98}, {{4, 8}, 15.82}, {{3, 7}, 12.87}, {{5, 9}, 6.31},
            {{5, 10}, 4.02}, {{3, 6}, 3.85}, {{5, 8}, 3.28}, {{4, 7}, 3.11},
            {{4, 9}, 2.70}});
  spec.price_distribution[idx(Institution::Liability)] =
      fill({{{4, 8}, 20.00}, {{3, 7}, 12.79}, {{2, 6}, 12.46}, {{5, 8}, 5.16},
            {{5, 9}, 4.92}, {{6, 8}, 3.44}, {{5, 10}, 3.36}, {{6, 10}, 2.62},
            {{4, 10}, 2.38}});
  // 1 - (1 - 0.086)^4 ~= 0.30 of experts defraud at least one slot.
  spec.fraud = {0.086, 0.0, 0.086};
  return spec;
}

std::vector<const ExpertRecord*> ReplayPool::experts_in(Institution i) const {
  std::vector<const ExpertRecord*> out;
  for (const ExpertRecord& r : experts)
    if (r.institution == i) out.push_back(&r);
  return out;
}

std::vector<const ConsumerRecord*> ReplayPool::consumers_in(Institution i) const {
  std::vector<const ConsumerRecord*> out;
  for (const ConsumerRecord& r : consumers)
    if (r.institution == i) out.push_back(&r);
  return out;
}

// ---------------------------------------------------------------------------

ExpertPolicy::ExpertPolicy(std::string id, Spec spec)
    : id_(std::move(id)), spec_(std::move(spec)) {}

std::optional<Objective> ExpertPolicy::objective() const {
  if (const auto* r = std::get_if<Rational>(&spec_)) return r->objective;
  if (const auto* s = std::get_if<ScriptedProfile>(&spec_)) return s->objective;
  if (const auto* d = std::get_if<Delegated>(&spec_)) return d->objective;
  return std::nullopt;
}

ExpertPlan ExpertPolicy::decide(const DecisionContext& ctx) const {
  const MarketParams& params = ctx.params;
  const Institution inst = ctx.institution;
  return std::visit(
      [&](const auto& s) -> ExpertPlan {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Rational>) {
          PricePair prices = s.prices ? *s.prices : solver_prices(params, inst, s.objective);
          SlotRule rule{rational_action(s.objective, params, inst, ProblemType::Small, prices),
                        rational_action(s.objective, params, inst, ProblemType::Big, prices)};
          return {uniform_strategy(params, prices, rule), false, std::nullopt};
        } else if constexpr (std::is_same_v<T, ScriptedProfile>) {
          RandomStream rng = expert_stream(ctx);
          return {sample_strategy(params, s.prices_for(inst), s.actions[idx(inst)], rng),
                  false, std::nullopt};
        } else if constexpr (std::is_same_v<T, Fixed>) {
          return {uniform_strategy(params, s.prices, s.rule), false, std::nullopt};
        } else if constexpr (std::is_same_v<T, Mixture>) {
          RandomStream rng = expert_stream(ctx);
          const auto& pairs = s.pairs[idx(inst)];
          PricePair prices = pairs[rng.weighted_index(s.weights[idx(inst)])];
          std::array<Ratio, 3> fraud = {
              to_ratio_checked(s.fraud.undertreatment, "undertreatment"),
              to_ratio_checked(s.fraud.overtreatment, "overtreatment"),
              to_ratio_checked(s.fraud.overcharging, "overcharging")};
          ExpertStrategy strat{prices, {}};
          for (int slot = 0; slot < params.n_consumers; ++slot) {
            SlotRule r;
            r.small = mixture_action(inst, ProblemType::Small, fraud, rng);
            r.big = mixture_action(inst, ProblemType::Big, fraud, rng);
            strat.slots.push_back(r);
          }
          return {std::move(strat), false, std::nullopt};
        } else if constexpr (std::is_same_v<T, Replay>) {
          const ExpertRecord& row = replay_expert_row(*s.pool, ctx);
          std::optional<Objective> obj;
          if (row.delegated) obj = row.chosen_objective.value_or(Objective::SelfInterested);
          return {uniform_strategy(params, row.prices, row.rule), row.delegated, obj};
        } else if constexpr (std::is_same_v<T, Planned>) {
          return {s.strategy, false, std::nullopt};
        } else if constexpr (std::is_same_v<T, Delegated>) {
          ExpertPlan plan = s.acting->decide(ctx);
          plan.delegated = s.delegated;
          plan.llm_objective = s.delegated ? s.objective : std::nullopt;
          return plan;
        } else {
          static_assert(std::is_same_v<T, DelegationMix>);
          RandomStream rng = ctx.market.child("delegation", ctx.index);
          if (!rng.bernoulli(s.delegation_rate)) {
            ExpertPlan plan = s.human->decide(ctx);
            plan.delegated = false;
            plan.llm_objective.reset();
            return plan;
          }
          Objective obj = Objective::SelfInterested;
          if (s.regime == ObjectiveRegime::ChosenObjective) {
            std::vector<Ratio> w;
            for (const auto& share : s.objective_shares) w.push_back(share.second);
            obj = s.objective_shares[rng.weighted_index(w)].first;
          }
          ExpertPolicy llm("llm", scripted_llm_profile(ScriptedSource::HumanAIHuman, obj));
          ExpertPlan plan = llm.decide(ctx);
          plan.delegated = true;
          plan.llm_objective = obj;
          return plan;
        }
      },
      spec_);
}

std::optional<AnalyticPlan> ExpertPolicy::analytic_plan(const MarketParams& params,
                                                        Institution inst) const {
  return std::visit(
      [&](const auto& s) -> std::optional<AnalyticPlan> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Rational>) {
          PricePair prices = s.prices ? *s.prices : solver_prices(params, inst, s.objective);
          return AnalyticPlan{
              prices, false, std::nullopt,
              {point(rational_action(s.objective, params, inst, ProblemType::Small, prices)),
               point(rational_action(s.objective, params, inst, ProblemType::Big, prices))}};
        } else if constexpr (std::is_same_v<T, ScriptedProfile>) {
          return AnalyticPlan{s.prices_for(inst), false, std::nullopt, s.actions[idx(inst)]};
        } else if constexpr (std::is_same_v<T, Fixed>) {
          return AnalyticPlan{s.prices, false, std::nullopt,
                              {point(s.rule.small), point(s.rule.big)}};
        } else if constexpr (std::is_same_v<T, Planned>) {
          const auto& slots = s.strategy.slots;
          if (slots.empty()) return std::nullopt;
          for (const SlotRule& r : slots)
            if (!(r == slots.front())) return std::nullopt;
          return AnalyticPlan{s.strategy.prices, false, std::nullopt,
                              {point(slots.front().small), point(slots.front().big)}};
        } else if constexpr (std::is_same_v<T, Delegated>) {
          auto plan = s.acting->analytic_plan(params, inst);
          if (plan) {
            plan->delegated = s.delegated;
            plan->llm_objective = s.delegated ? s.objective : std::nullopt;
          }
          return plan;
        } else {
          return std::nullopt;
        }
      },
      spec_);
}

ExpertPolicyPtr make_rational(Objective objective, std::optional<PricePair> prices) {
  if (objective == Objective::NoObjective)
    throw std::invalid_argument("NoObjective has no rational policy");
  std::string id = "rational:" + std::string(to_string(objective));
  return std::make_shared<ExpertPolicy>(id, ExpertPolicy::Rational{objective, prices});
}

ExpertPolicyPtr make_scripted(ScriptedProfile profile) {
  std::string id = "scripted:" + profile.label;
  return std::make_shared<ExpertPolicy>(id, std::move(profile));
}

ExpertPolicyPtr make_fixed(PricePair prices, SlotRule rule) {
  return std::make_shared<ExpertPolicy>("fixed:" + prices.to_string(),
                                        ExpertPolicy::Fixed{prices, rule});
}

ExpertPolicyPtr make_replay_expert(std::shared_ptr<const ReplayPool> pool) {
  if (!pool) throw std::invalid_argument("replay expert needs a pool");
  std::string id = "replay:" + pool->name;
  return std::make_shared<ExpertPolicy>(id, ExpertPolicy::Replay{std::move(pool)});
}

ExpertPolicyPtr make_planned(ExpertStrategy strategy, std::string id) {
  return std::make_shared<ExpertPolicy>(std::move(id),
                                        ExpertPolicy::Planned{std::move(strategy)});
}

ExpertPolicyPtr make_delegation_mix(ExpertPolicyPtr human, Ratio delegation_rate,
                                    ObjectiveRegime regime,
                                    std::vector<std::pair<Objective, Ratio>> shares) {
  if (!human) throw std::invalid_argument("delegation mix needs a human policy");
  if (delegation_rate < 0 || delegation_rate > 1)
    throw std::invalid_argument("delegation rate outside [0, 1]");
  if (regime == ObjectiveRegime::ChosenObjective) {
    Ratio total(0);
    for (const auto& s : shares) {
      if (s.second < 0) throw std::invalid_argument("negative objective share");
      total += s.second;
    }
    if (total != 1) throw std::invalid_argument("objective shares must sum to 1");
  }
  std::string id = "delegation-mix:" + human->id();
  return std::make_shared<ExpertPolicy>(
      std::move(id),
      ExpertPolicy::DelegationMix{std::move(human), delegation_rate, regime,
                                  std::move(shares)});
}

ExpertAction rational_action(Objective objective, const MarketParams& params,
                             Institution inst, ProblemType problem, PricePair prices) {
  return best_response(objective, params, inst, problem, prices);
}

ExpertPolicyPtr behavioral_mixture(const MixtureSpec& spec, const MarketParams& params) {
  ExpertPolicy::Mixture m;
  m.fraud = spec.fraud;
  to_ratio_checked(spec.fraud.undertreatment, "undertreatment");
  to_ratio_checked(spec.fraud.overtreatment, "overtreatment");
  to_ratio_checked(spec.fraud.overcharging, "overcharging");
  for (Institution inst : kInstitutions) {
    const auto& dist = spec.price_distribution[idx(inst)];
    const std::string where = std::string(to_string(inst));
    if (dist.empty()) throw std::invalid_argument("empty price distribution for " + where);
    double total = 0.0;
    for (const auto& [pp, w] : dist) {
      validate_prices(params, pp);
      if (!std::isfinite(w) || w < 0.0)
        throw std::invalid_argument("negative price weight for " + where);
      total += w;
    }
    if (std::fabs(total - 1.0) > 1e-9)
      throw std::invalid_argument("price weights for " + where + " sum to " +
                                  std::to_string(total) + ", expected 1");
    for (const auto& [pp, w] : dist) {
      m.pairs[idx(inst)].push_back(pp);
      m.weights[idx(inst)].push_back(probability_from_double(w));
    }
  }
  return std::make_shared<ExpertPolicy>("mixture", std::move(m));
}

ExpertPolicyPtr delegation_wrap(ExpertPolicyPtr inner_human, const DelegationChoice& delegation,
                                ExpertPolicyPtr llm) {
  if (delegation.chosen_objective && !delegation.delegated)
    throw std::invalid_argument("chosen objective requires delegation");
  if (!delegation.delegated) {
    if (!inner_human) throw std::invalid_argument("delegation_wrap: missing human policy");
    return std::make_shared<ExpertPolicy>(
        inner_human->id(), ExpertPolicy::Delegated{inner_human, false, std::nullopt});
  }
  if (!llm) throw std::invalid_argument("delegation_wrap: missing LLM policy");
  std::optional<Objective> obj = llm->objective();
  if (delegation.chosen_objective && obj != delegation.chosen_objective)
    throw std::invalid_argument(
        "delegation_wrap: chosen objective " +
        std::string(to_string(*delegation.chosen_objective)) +
        " does not match LLM policy '" + llm->id() + "'");
  return std::make_shared<ExpertPolicy>(llm->id(),
                                        ExpertPolicy::Delegated{llm, true, obj});
}

// ---------------------------------------------------------------------------

ConsumerPolicy::ConsumerPolicy(std::string id, Spec spec, TieBreak tie_break)
    : id_(std::move(id)), spec_(std::move(spec)), tie_break_(tie_break) {}

ConsumerPolicyPtr make_threshold(BeliefModel belief, TieBreak tie) {
  return std::make_shared<ConsumerPolicy>("threshold:" + belief.to_string(),
                                          ConsumerPolicy::Threshold{belief}, tie);
}

ConsumerPolicyPtr make_trust(std::array<Ratio, 3> rates, BeliefModel belief, TieBreak tie) {
  for (const Ratio& r : rates)
    if (r < 0 || r > 1) throw std::invalid_argument("trust rate outside [0, 1]");
  return std::make_shared<ConsumerPolicy>("trust", ConsumerPolicy::Trust{rates, belief}, tie);
}

ConsumerPolicyPtr make_transparency_aware(TieBreak tie) {
  return std::make_shared<ConsumerPolicy>(
      "transparency-aware", ConsumerPolicy::TransparencyAware{BeliefModel::standard()}, tie);
}

ConsumerPolicyPtr make_replay_consumer(std::shared_ptr<const ReplayPool> pool) {
  if (!pool) throw std::invalid_argument("replay consumer needs a pool");
  std::string id = "replay:" + pool->name;
  return std::make_shared<ConsumerPolicy>(id, ConsumerPolicy::Replay{std::move(pool)});
}

ConsumerPolicyPtr make_fixed_choice(std::optional<std::size_t> expert) {
  std::string id = expert ? "fixed-choice:A" + std::to_string(*expert + 1) : "fixed-choice:optout";
  return std::make_shared<ConsumerPolicy>(id, ConsumerPolicy::Fixed{expert});
}

std::array<Ratio, 3> human_trust_rates() {
  return {Ratio(66, 100), Ratio(66, 100), Ratio(80, 100)};
}

std::vector<Ratio> offer_values(const ConsumerPolicy& policy, const MarketParams& params,
                                Institution inst, std::span<const ExpertOffer> offers) {
  std::vector<Ratio> values;
  values.reserve(offers.size());
  for (const ExpertOffer& o : offers) {
    BeliefModel belief = BeliefModel::standard();
    if (const auto* t = std::get_if<ConsumerPolicy::Threshold>(&policy.spec())) {
      belief = t->belief;
    } else if (const auto* tr = std::get_if<ConsumerPolicy::Trust>(&policy.spec())) {
      belief = tr->belief;
    } else if (const auto* ta = std::get_if<ConsumerPolicy::TransparencyAware>(&policy.spec())) {
      belief = o.disclosed_objective ? BeliefModel::disclosed(*o.disclosed_objective)
                                     : ta->fallback;
    }
    values.push_back(expected_consumer_payoff(params, inst, o.prices, belief));
  }
  return values;
}

namespace {

std::vector<std::size_t> argmax_set(const std::vector<Ratio>& values) {
  Ratio best = *std::max_element(values.begin(), values.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] == best) out.push_back(i);
  return out;
}

std::size_t pick(const std::vector<std::size_t>& ties, TieBreak tb, RandomStream& rng) {
  if (tb == TieBreak::LowestIndex || ties.size() == 1) return ties.front();
  return ties[rng.uniform_index(ties.size())];
}

}  // namespace

ConsumerChoice consumer_choose(const ConsumerPolicy& policy, const MarketParams& params,
                               Institution inst, std::span<const ExpertOffer> offers,
                               RandomStream& rng, std::size_t consumer_index,
                               const RandomStream* market) {
  if (offers.empty()) throw std::invalid_argument("consumer_choose: no offers");
  if (const auto* fx = std::get_if<ConsumerPolicy::Fixed>(&policy.spec())) {
    if (!fx->expert) return ConsumerChoice::opt_out();
    if (*fx->expert >= offers.size())
      throw std::invalid_argument("fixed choice names expert " + std::to_string(*fx->expert + 1) +
                                  " of " + std::to_string(offers.size()));
    return ConsumerChoice::approach(*fx->expert);
  }
  if (const auto* rp = std::get_if<ConsumerPolicy::Replay>(&policy.spec())) {
    if (!market) throw std::invalid_argument("replay consumer needs the market stream");
    std::vector<const ConsumerRecord*> rows = rp->pool->consumers_in(inst);
    if (rows.size() < static_cast<std::size_t>(params.n_consumers))
      throw std::runtime_error("replay pool '" + rp->pool->name + "' has " +
                               std::to_string(rows.size()) + " consumer rows for " +
                               std::string(to_string(inst)));
    std::vector<std::size_t> perm = market->child("replay-consumer").permutation(rows.size());
    const ConsumerRecord& row = *rows[perm[consumer_index]];
    if (!row.approach) return ConsumerChoice::opt_out();
    if (*row.approach >= offers.size())
      throw std::runtime_error("replayed consumer '" + row.subject_id +
                               "' approaches a missing expert");
    return ConsumerChoice::approach(*row.approach);
  }

  std::vector<Ratio> values = offer_values(policy, params, inst, offers);
  std::vector<std::size_t> ties = argmax_set(values);
  if (const auto* tr = std::get_if<ConsumerPolicy::Trust>(&policy.spec())) {
    if (!rng.bernoulli(tr->approach_rate[idx(inst)])) return ConsumerChoice::opt_out();
    return ConsumerChoice::approach(pick(ties, policy.tie_break(), rng));
  }
  // Indifferent consumers approach.
  if (values[ties.front()] < Ratio(params.outside_option.cents()))
    return ConsumerChoice::opt_out();
  return ConsumerChoice::approach(pick(ties, policy.tie_break(), rng));
}

std::optional<std::vector<Ratio>> consumer_choice_distribution(
    const ConsumerPolicy& policy, const MarketParams& params, Institution inst,
    std::span<const ExpertOffer> offers) {
  if (offers.empty()) throw std::invalid_argument("consumer_choice_distribution: no offers");
  if (std::holds_alternative<ConsumerPolicy::Replay>(policy.spec())) return std::nullopt;
  if (const auto* fx = std::get_if<ConsumerPolicy::Fixed>(&policy.spec())) {
    std::vector<Ratio> dist(offers.size() + 1, Ratio(0));
    if (fx->expert && *fx->expert >= offers.size())
      throw std::invalid_argument("fixed choice names a missing expert");
    dist[fx->expert ? *fx->expert : offers.size()] = Ratio(1);
    return dist;
  }
  std::vector<Ratio> values = offer_values(policy, params, inst, offers);
  std::vector<std::size_t> ties = argmax_set(values);
  Ratio approach(1);
  if (const auto* tr = std::get_if<ConsumerPolicy::Trust>(&policy.spec())) {
    approach = tr->approach_rate[idx(inst)];
  } else if (values[ties.front()] < Ratio(params.outside_option.cents())) {
    approach = Ratio(0);
  }
  std::vector<Ratio> dist(offers.size() + 1, Ratio(0));
  if (policy.tie_break() == TieBreak::LowestIndex) {
    dist[ties.front()] = approach;
  } else {
    for (std::size_t i : ties) dist[i] = approach / static_cast<std::int64_t>(ties.size());
  }
  dist.back() = Ratio(1) - approach;
  return dist;
}

std::array<Objective, 4> objective_choices() { return kObjectives; }

}  // namespace credence
