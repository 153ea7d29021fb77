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

#ifndef CREDENCE_RNG_HPP_
#define CREDENCE_RNG_HPP_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "credence/money.hpp"

namespace credence {

// Counter-based random stream. A stream is identified by a 64-bit key; the
// n-th draw is splitmix64(key + n * golden). Child streams are derived from
// (parent key, tag, index) without consuming parent draws, so new consumers
// of randomness never shift existing ones.
//
// Key scheme used by the market engine:
//   root            = derive(seed)
//   replicate r     = root.child(kTagReplicate, r)
//   expert i        = replicate.child(kTagExpert, i)
//   consumer j      = replicate.child(kTagConsumer, j)
//   problem of j    = replicate.child(kTagProblem, j)
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  RandomStream child(std::uint64_t tag, std::uint64_t index = 0) const;
  RandomStream child(std::string_view tag, std::uint64_t index = 0) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t draws() const { return counter_; }

  std::uint64_t next_u64();
  // Uniform in [0, n) by rejection; n > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  // Exact Bernoulli draw for a rational probability.
  bool bernoulli(const Ratio& p);
  // Index drawn proportionally to rational weights (need not be normalized,
  // must be non-negative with a positive total).
  std::size_t weighted_index(std::span<const Ratio> weights);
  // Fisher-Yates permutation of [0, n).
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  RandomStream(std::uint64_t key, int) : key_(key) {}
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline constexpr std::uint64_t kTagReplicate = 0x7265706c;  // "repl"
inline constexpr std::uint64_t kTagExpert = 0x65787074;     // "expt"
inline constexpr std::uint64_t kTagConsumer = 0x636f6e73;   // "cons"
inline constexpr std::uint64_t kTagProblem = 0x70726f62;    // "prob"

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_tag(std::string_view tag);  // FNV-1a 64

}  // namespace credence

#endif  // CREDENCE_RNG_HPP_
