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

// Running scenario grids and writing their results.
//
// Metric tables have one row per (institution, condition) with a stable
// column order. Money renders with two decimals, shares with four. CSV and
// JSON carry the same rendered numbers. Digests are one JSON object per
// market, one per line, and parse back into MarketOutcome.

#ifndef CREDENCE_REPORT_HPP_
#define CREDENCE_REPORT_HPP_

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "credence/equilibrium.hpp"
#include "credence/replication.hpp"
#include "credence/scenario.hpp"

namespace credence {

struct CellResult {
  std::string condition;
  Institution institution = Institution::NoInstitution;
  ReplicationReport report;
  std::optional<ExpectedMarket> expected;  // closed form, when available
};

struct ScenarioRun {
  std::string scenario;
  MarketParams params;
  std::int64_t n_reps = 0;
  std::uint64_t seed = 0;
  SurplusMode surplus = SurplusMode::GroupTotal;
  EfficiencyMode efficiency = EfficiencyMode::RealizedDenominator;
  std::vector<CellResult> cells;  // institutions outer, conditions inner
};

struct RunOverrides {
  std::optional<std::int64_t> n_reps;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<bool> keep_digests;
};

// Each cell is seeded from (seed, condition name, institution) so cells are
// independent and reordering conditions in the file only moves rows.
ScenarioRun run_scenario(const ScenarioSpec& spec, const RunOverrides& overrides = {});

// Same, with the market of each cell built by `setup`; cells for which it
// returns nullopt are skipped.
using SetupFactory =
    std::function<std::optional<MarketSetup>(const Condition& condition, Institution inst)>;
ScenarioRun run_scenario(const ScenarioSpec& spec, const RunOverrides& overrides,
                         const SetupFactory& setup);
std::uint64_t cell_seed(std::uint64_t seed, const std::string& condition, Institution inst);

// --- tables ---------------------------------------------------------------

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;  // rendered cells; "" = missing
  std::vector<bool> numeric;                   // per column
};

Table metrics_table(const ScenarioRun& run);
Table predictions_table(const PredictionReport& report);

void write_csv(std::ostream& out, const Table& t);
// {"columns": [...], "rows": [{col: value}, ...]} with numbers as numbers.
void write_json(std::ostream& out, const Table& t, const std::string& title);

// --- digests --------------------------------------------------------------

std::string digest_json(const MarketOutcome& o, const std::string& condition, std::int64_t rep);

struct DigestRecord {
  std::string condition;
  std::int64_t rep = 0;
  MarketOutcome outcome;
};
// Throws std::invalid_argument naming the line on malformed input.
std::vector<DigestRecord> read_digests(std::istream& in);
// Appends every line; the session service uses the same format.
void write_digests(std::ostream& out, const ScenarioRun& run);

// Rebuilds a run from digests alone (one cell per condition and institution).
ScenarioRun run_from_digests(const std::vector<DigestRecord>& records,
                             const MarketParams& params, const std::string& name);

// --- files ----------------------------------------------------------------

// Writes <dir>/<stem>.metrics.{csv,json} and, when digests were kept,
// <dir>/<stem>.digests.ndjson. Returns the paths written. Throws
// std::runtime_error on I/O failure.
std::vector<std::filesystem::path> emit_results(const ScenarioRun& run, const OutputSpec& out,
                                                const std::string& stem);
std::vector<std::filesystem::path> emit_predictions(const PredictionReport& report,
                                                    const std::filesystem::path& dir,
                                                    bool csv, bool json);

std::string format_share(double x);  // four decimals

}  // namespace credence

#endif  // CREDENCE_REPORT_HPP_
