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

// Reference computations written directly from the game rules, sharing no
// code with the library beyond its value types. Prices are integer units and
// payoffs are exact fractions of units.

#ifndef CREDENCE_TESTS_ORACLES_HPP_
#define CREDENCE_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cstdint>
#include <vector>

#include <boost/rational.hpp>

namespace oracle {

using Q = boost::rational<std::int64_t>;

enum Inst { kNone = 0, kVerif = 1, kLiab = 2 };

struct Act {
  bool hct;
  bool high;
};

struct Game {
  std::int64_t v = 10;
  Q sigma = Q(8, 5);
  Q h = Q(1, 2);
  std::int64_t cl = 2;
  std::int64_t ch = 6;
};

inline std::vector<Act> allowed(Inst inst, bool big) {
  std::vector<Act> out;
  for (bool hct : {false, true})
    for (bool high : {false, true}) {
      if (inst == kVerif && hct != high) continue;
      if (inst == kLiab && big && !hct) continue;
      out.push_back({hct, high});
    }
  return out;
}

inline std::int64_t consumer_pay(const Game& g, bool big, int lo, int hi, Act a) {
  bool solved = a.hct || !big;
  return (solved ? g.v : 0) - (a.high ? hi : lo);
}

inline std::int64_t expert_pay(const Game& g, int lo, int hi, Act a) {
  return (a.high ? hi : lo) - (a.hct ? g.ch : g.cl);
}

// Consumer's expected payoff against a money-maximising expert. Among the
// expert's payoff-maximising actions, `honest_ties` picks the honest one when
// available; otherwise the one worst for the consumer.
inline Q self_interest_value(const Game& g, Inst inst, int lo, int hi, bool honest_ties) {
  Q total(0);
  for (bool big : {false, true}) {
    std::vector<Act> acts = allowed(inst, big);
    std::int64_t best = INT64_MIN;
    for (Act a : acts) best = std::max(best, expert_pay(g, lo, hi, a));
    std::vector<std::int64_t> candidates;
    std::int64_t honest_value = INT64_MIN;
    bool has_honest = false;
    for (Act a : acts) {
      if (expert_pay(g, lo, hi, a) != best) continue;
      std::int64_t c = consumer_pay(g, big, lo, hi, a);
      candidates.push_back(c);
      if (a.hct == big && a.high == a.hct) {
        has_honest = true;
        honest_value = c;
      }
    }
    std::int64_t chosen;
    if (honest_ties && has_honest) {
      chosen = honest_value;
    } else if (honest_ties) {
      chosen = *std::max_element(candidates.begin(), candidates.end());
    } else {
      chosen = *std::min_element(candidates.begin(), candidates.end());
    }
    total += (big ? g.h : Q(1) - g.h) * chosen;
  }
  return total;
}

// P(at least one of n independent slots is fraudulent).
inline double any_of(double p, int n) {
  double none = 1.0;
  for (int i = 0; i < n; ++i) none *= 1.0 - p;
  return 1.0 - none;
}

}  // namespace oracle

#endif  // CREDENCE_TESTS_ORACLES_HPP_
