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

#include "credence/rng.hpp"

#include <numeric>
#include <stdexcept>

namespace credence {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t lcm_checked(std::uint64_t a, std::uint64_t b) {
  std::uint64_t g = std::gcd(a, b);
  std::uint64_t q = a / g;
  if (q != 0 && b > UINT64_MAX / q) throw std::overflow_error("weight denominators too large");
  return q * b;
}
}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RandomStream::RandomStream(std::uint64_t seed) : key_(splitmix64(seed)) {}

RandomStream RandomStream::child(std::uint64_t tag, std::uint64_t index) const {
  std::uint64_t k = splitmix64(key_ ^ splitmix64(tag));
  return RandomStream(splitmix64(k ^ splitmix64(index + kGolden)), 0);
}

RandomStream RandomStream::child(std::string_view tag, std::uint64_t index) const {
  return child(hash_tag(tag), index);
}

std::uint64_t RandomStream::next_u64() {
  return splitmix64(key_ + (counter_++) * kGolden);
}

std::uint64_t RandomStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index over empty range");
  // Reject the top partial block so every residue is equally likely.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n + 1) % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x > limit);
  return x % n;
}

bool RandomStream::bernoulli(const Ratio& p) {
  if (p <= 0) return false;
  if (p >= 1) return true;
  auto den = static_cast<std::uint64_t>(p.denominator());
  auto num = static_cast<std::uint64_t>(p.numerator());
  return uniform_index(den) < num;
}

std::size_t RandomStream::weighted_index(std::span<const Ratio> weights) {
  if (weights.empty()) throw std::invalid_argument("weighted_index over no weights");
  std::uint64_t common = 1;
  for (const Ratio& w : weights) {
    if (w < 0) throw std::invalid_argument("negative weight");
    common = lcm_checked(common, static_cast<std::uint64_t>(w.denominator()));
  }
  std::vector<std::uint64_t> scaled;
  std::uint64_t total = 0;
  for (const Ratio& w : weights) {
    std::uint64_t s = static_cast<std::uint64_t>(w.numerator()) *
                      (common / static_cast<std::uint64_t>(w.denominator()));
    scaled.push_back(s);
    total += s;
  }
  if (total == 0) throw std::invalid_argument("weights sum to zero");
  std::uint64_t u = uniform_index(total);
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    if (u < scaled[i]) return i;
    u -= scaled[i];
  }
  return scaled.size() - 1;
}

std::vector<std::size_t> RandomStream::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = uniform_index(i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

}  // namespace credence
