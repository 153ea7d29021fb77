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

// Exhaustive equilibrium search over the price grid.
//
// For every valid price pair the expert's subgame behaviour is its best
// response per problem type; consumers value the pair under the belief that
// matches the information regime. Price competition then selects:
//
//   * self-interested / efficiency-loving experts: the participating pairs
//     (E_c >= sigma, E_e > 0) with the highest consumer payoff, ties going to
//     the higher expected objective utility;
//   * inequity-averse experts: among participating pairs, those with the
//     highest expected equity utility, then the highest consumer payoff.

#ifndef CREDENCE_EQUILIBRIUM_HPP_
#define CREDENCE_EQUILIBRIUM_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "credence/core.hpp"

namespace credence {

enum class SelectionRule {
  PositiveProfit,  // stop undercutting while profit is strictly positive
  ZeroProfit,      // Bertrand-style: zero profit allowed
};

struct SolverOptions {
  SelectionRule rule = SelectionRule::PositiveProfit;
};

struct EquilibriumResult {
  Institution institution = Institution::NoInstitution;
  Objective objective = Objective::SelfInterested;
  bool transparent = false;
  bool market_breaks_down = false;

  std::vector<PricePair> price_set;  // every selected pair, grid order
  std::optional<int> p_low;          // nullopt: undetermined (wildcard)
  std::optional<int> p_high;
  PricePair representative;          // first pair of the set
  std::array<ExpertAction, 2> strategy;  // [Small, Big] at representative

  Ratio consumer;       // expected per-interaction payoff, cents
  Ratio expert;         // expected per-interaction payoff, cents
  Ratio total_income;   // n_consumers * (consumer + expert), cents

  // "(*, 3)", "(3, 7)" or "{(4, 5), (5, 5)}"; "breakdown" when no pair.
  std::string prices_label() const;
};

// Belief consumers hold in the given information regime.
BeliefModel regime_belief(Objective objective, bool transparent);

// Requires objective != NoObjective. Throws std::invalid_argument otherwise.
EquilibriumResult solve_prediction(const MarketParams& params, Institution inst,
                                   Objective objective, bool transparent,
                                   const SolverOptions& options = {});

struct MonopolyResult {
  PricePair prices;
  std::vector<PricePair> price_set;
  std::optional<int> p_low;  // nullopt: undetermined
  bool participation = true;
  // Highest high price at which consumers still participate, if any.
  std::optional<int> participation_boundary;
  Ratio consumer;
  Ratio expert;
};

// Single expert facing threshold consumers with the regime's standard belief.
MonopolyResult monopoly_price(const MarketParams& params, Institution inst,
                              Objective objective = Objective::SelfInterested);

struct PredictionCheck {
  std::string cell;
  std::string expected;  // printable expectation
  std::vector<EquilibriumResult> results;
  bool pass = false;
};

struct PredictionReport {
  std::vector<PredictionCheck> checks;
  bool all_pass() const;
  std::size_t passed() const;
};

// Solves every benchmark cell and compares with the reference values.
PredictionReport verify_predictions(const MarketParams& params,
                                    const SolverOptions& options = {});

}  // namespace credence

#endif  // CREDENCE_EQUILIBRIUM_HPP_
