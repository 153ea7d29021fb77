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

#ifndef CREDENCE_MONEY_HPP_
#define CREDENCE_MONEY_HPP_

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include <boost/rational.hpp>

// Boost 1.74's mixed rational/integer operator== recurses forever under
// C++20 rewritten comparisons; exact non-template overloads take precedence.
namespace boost {
inline bool operator==(const rational<std::int64_t>& a, int b) {
  return a == rational<std::int64_t>(b);
}
inline bool operator==(const rational<std::int64_t>& a, long b) {
  return a == rational<std::int64_t>(b);
}
inline bool operator==(const rational<std::int64_t>& a, long long b) {
  return a == rational<std::int64_t>(static_cast<std::int64_t>(b));
}
}  // namespace boost

namespace credence {

// Exact rational used for probabilities and for expectations of Money.
using Ratio = boost::rational<std::int64_t>;

// Currency in fixed-point hundredths. All game quantities (1.6, 15.68, ...)
// are exact in this representation.
class Money {
 public:
  constexpr Money() = default;

  static constexpr Money from_cents(std::int64_t cents) { return Money(cents); }
  static constexpr Money from_units(std::int64_t units) {
    return Money(units * 100);
  }
  // Parses "1.6", "-3", "15.68". At most two decimals; throws
  // std::invalid_argument otherwise.
  static Money parse(std::string_view text);

  constexpr std::int64_t cents() const { return cents_; }
  double to_double() const { return static_cast<double>(cents_) / 100.0; }
  Ratio to_ratio() const { return Ratio(cents_); }

  // Always two decimals: "1.60", "-3.00".
  std::string to_string() const;

  constexpr Money operator-() const { return Money(-cents_); }
  constexpr Money& operator+=(Money o) {
    cents_ += o.cents_;
    return *this;
  }
  constexpr Money& operator-=(Money o) {
    cents_ -= o.cents_;
    return *this;
  }
  friend constexpr Money operator+(Money a, Money b) { return a += b; }
  friend constexpr Money operator-(Money a, Money b) { return a -= b; }
  friend constexpr Money operator*(Money a, std::int64_t k) {
    return Money(a.cents_ * k);
  }
  friend constexpr Money operator*(std::int64_t k, Money a) { return a * k; }
  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  constexpr explicit Money(std::int64_t cents) : cents_(cents) {}
  std::int64_t cents_ = 0;
};

// Probability as an exact rational in [0, 1]. Parse accepts decimals
// ("0.5", "0.98") and fractions ("49/50").
Ratio parse_probability(std::string_view text);
// Nearest rational with denominator 1e9; used for weights that arrive as
// doubles (mixture tables, trust rates).
Ratio probability_from_double(double p);
bool is_probability(const Ratio& p);

// Expected money is a rational number of cents.
std::string format_cents(const Ratio& cents);  // two decimals, half away from 0
double cents_to_double(const Ratio& cents);
inline double ratio_to_double(const Ratio& r) {
  return boost::rational_cast<double>(r);
}

}  // namespace credence

#endif  // CREDENCE_MONEY_HPP_
