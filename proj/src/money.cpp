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

#include "credence/money.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace credence {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Parses an optionally signed decimal into numerator / 10^k.
Ratio parse_decimal(std::string_view raw) {
  std::string s = trim(raw);
  if (s.empty()) throw std::invalid_argument("empty number");
  bool negative = false;
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') {
    negative = s[0] == '-';
    i = 1;
  }
  std::int64_t num = 0, den = 1;
  bool seen_dot = false, seen_digit = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("malformed number: " + s);
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw std::invalid_argument("malformed number: " + s);
    seen_digit = true;
    if (num > (INT64_MAX - 9) / 10 || (seen_dot && den > INT64_MAX / 10)) {
      throw std::invalid_argument("number out of range: " + s);
    }
    num = num * 10 + (c - '0');
    if (seen_dot) den *= 10;
  }
  if (!seen_digit) throw std::invalid_argument("malformed number: " + s);
  return Ratio(negative ? -num : num, den);
}

}  // namespace

Money Money::parse(std::string_view text) {
  Ratio r = parse_decimal(text) * 100;
  if (r.denominator() != 1) {
    throw std::invalid_argument("currency has more than two decimals: " +
                                std::string(text));
  }
  return Money(r.numerator());
}

std::string Money::to_string() const { return format_cents(Ratio(cents_)); }

Ratio parse_probability(std::string_view text) {
  std::string s = trim(text);
  Ratio r;
  if (auto slash = s.find('/'); slash != std::string::npos) {
    Ratio n = parse_decimal(std::string_view(s).substr(0, slash));
    Ratio d = parse_decimal(std::string_view(s).substr(slash + 1));
    if (d == 0) throw std::invalid_argument("zero denominator: " + s);
    r = n / d;
  } else {
    r = parse_decimal(s);
  }
  if (!is_probability(r)) throw std::invalid_argument("not a probability: " + s);
  return r;
}

Ratio probability_from_double(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("probability outside [0,1]");
  }
  constexpr std::int64_t kScale = 1'000'000'000;
  return Ratio(static_cast<std::int64_t>(std::llround(p * kScale)), kScale);
}

bool is_probability(const Ratio& p) { return p >= 0 && p <= 1; }

std::string format_cents(const Ratio& cents) {
  // Round to whole cents, half away from zero.
  std::int64_t n = cents.numerator(), d = cents.denominator();
  bool negative = n < 0;
  std::int64_t a = negative ? -n : n;
  std::int64_t whole = a / d, rem = a % d;
  if (2 * rem >= d) ++whole;
  std::string out = std::to_string(whole / 100) + ".";
  std::int64_t frac = whole % 100;
  if (frac < 10) out += "0";
  out += std::to_string(frac);
  if (negative && whole != 0) out = "-" + out;
  return out;
}

double cents_to_double(const Ratio& cents) { return ratio_to_double(cents) / 100.0; }

}  // namespace credence
