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

// Ingestion of strategy-method records from human sessions.
//
// One row per subject. Columns (any order, header required):
//
//   subject_id, role, institution, p_low, p_high,
//   action_small_treatment, action_small_charge,
//   action_big_treatment, action_big_charge,
//   approach_choice, delegated, chosen_objective
//
// Expert rows fill prices and the four action fields; consumer rows fill
// approach_choice ("A1".."A4" or "optout"). Rows that break the grid or the
// institution's legality are rejected individually and reported.

#ifndef CREDENCE_HUMAN_DATA_HPP_
#define CREDENCE_HUMAN_DATA_HPP_

#include <array>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "credence/core.hpp"
#include "credence/policy.hpp"

namespace credence {

// File-level problem: unreadable, bad header, or nothing usable.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RejectedRow {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string subject_id;
  std::string reason;
};

struct PriceFrequency {
  PricePair prices;
  std::int64_t count = 0;
  double share = 0.0;
};

struct InstitutionSummary {
  std::int64_t experts = 0;
  std::int64_t consumers = 0;
  std::int64_t approached = 0;
  std::int64_t delegated = 0;
  // Most frequent first; ties in grid order.
  std::vector<PriceFrequency> price_pairs;
  // Undertreatment per big decision, overtreatment per small decision,
  // overcharging per LCT decision. Indexed by FraudKind.
  std::array<double, 3> fraud_share{};
  double approach_share() const {
    return consumers == 0 ? 0.0 : static_cast<double>(approached) / consumers;
  }
};

struct IngestSummary {
  std::size_t rows = 0;
  std::size_t accepted = 0;
  std::vector<RejectedRow> rejected;
  std::array<InstitutionSummary, 3> by_institution;

  const InstitutionSummary& in(Institution i) const {
    return by_institution[static_cast<std::size_t>(i)];
  }
  std::string to_text() const;
};

struct IngestResult {
  std::shared_ptr<const ReplayPool> pool;
  IngestSummary summary;
};

inline constexpr std::array<const char*, 12> kHumanCsvColumns = {
    "subject_id",          "role",
    "institution",         "p_low",
    "p_high",              "action_small_treatment",
    "action_small_charge", "action_big_treatment",
    "action_big_charge",   "approach_choice",
    "delegated",           "chosen_objective"};

// Throws DataError when the file cannot be read, the header lacks a column,
// or no row is accepted ("no records").
IngestResult ingest_human_csv(const std::string& path, const MarketParams& params = {});
IngestResult ingest_human_csv(std::istream& in, const std::string& name,
                              const MarketParams& params = {});

// Splits one CSV line; double-quoted fields may contain commas and "".
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace credence

#endif  // CREDENCE_HUMAN_DATA_HPP_
