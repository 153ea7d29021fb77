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

// One-shot market execution.
//
// A market runs in a fixed order: experts post offers and commit to a
// strategy-method plan, consumers choose simultaneously from the same offer
// list, each consumer's problem is drawn, the approached expert's planned
// action for (consumer slot, problem) is applied and payoffs are realized.
// Consumer j always uses slot j of whichever expert it approaches.

#ifndef CREDENCE_MARKET_HPP_
#define CREDENCE_MARKET_HPP_

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "credence/core.hpp"
#include "credence/policy.hpp"
#include "credence/rng.hpp"

namespace credence {

// A policy emitted an invalid price pair or an illegal action.
class MarketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MarketSetup {
  MarketParams params;
  Institution institution = Institution::NoInstitution;
  std::vector<ExpertPolicyPtr> experts;
  std::vector<ConsumerPolicyPtr> consumers;
  bool transparency = false;

  // Throws std::invalid_argument when counts disagree with params.
  void validate() const;
};

struct MarketOutcome {
  Institution institution = Institution::NoInstitution;
  bool transparency = false;
  std::vector<ExpertOffer> offers;
  std::vector<ExpertStrategy> strategies;  // per expert
  std::vector<std::optional<Objective>> llm_objectives;  // per expert, delegated only
  std::vector<ConsumerChoice> choices;      // per consumer
  std::vector<ProblemType> problems;        // per consumer, opted-out included
  std::vector<std::optional<ExpertAction>> actions;  // per consumer, served only
  std::vector<FraudSet> fraud;              // per consumer, empty when not served
  std::vector<Money> consumer_payoffs;      // per consumer
  std::vector<Money> expert_payoffs;        // per expert
  int optout_count = 0;

  // Action expert `e` planned for consumer slot `j` under that consumer's
  // realized problem.
  ExpertAction planned_action(std::size_t e, std::size_t j) const {
    return strategies[e].slots[j].for_problem(problems[j]);
  }
};

// `market` is the replicate stream; sub-streams are derived from it.
MarketOutcome run_market(const MarketSetup& setup, const RandomStream& market);

// The two halves of run_market, for callers that must show offers before
// consumers choose. post_offers fills offers, strategies and objectives;
// resolve_market completes that outcome with choices, problems and payoffs.
// Consumer policies are read only by resolve_market.
MarketOutcome post_offers(const MarketSetup& setup, const RandomStream& market);
void resolve_market(const MarketSetup& setup, const RandomStream& market, MarketOutcome& out);

// Exact expectation of a market whose policies all admit an analytic plan
// and a choice distribution. Group totals in cents.
struct ExpectedMarket {
  Ratio consumer_surplus;
  Ratio expert_surplus;
  Ratio approach_rate;
  Ratio max_income;  // expected maximum potential group income
  Ratio efficiency() const { return (consumer_surplus + expert_surplus) / max_income; }
  Ratio delta() const { return consumer_surplus - expert_surplus; }
};

// nullopt when some policy has no closed form (mixtures, replays).
std::optional<ExpectedMarket> expected_market(const MarketSetup& setup);

// Expected maximum potential income of one consumer, cents.
Ratio expected_max_income_per_consumer(const MarketParams& params);

}  // namespace credence

#endif  // CREDENCE_MARKET_HPP_
