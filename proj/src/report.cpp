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

#include "credence/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "credence/rng.hpp"
#include "json.hpp"

namespace credence {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string format_share(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  std::string s = buf;
  return s == "-0.0000" ? "0.0000" : s;
}

std::uint64_t cell_seed(std::uint64_t seed, const std::string& condition, Institution inst) {
  return splitmix64(seed ^ hash_tag(condition + "/" + std::string(to_string(inst))));
}

ScenarioRun run_scenario(const ScenarioSpec& spec, const RunOverrides& ov) {
  return run_scenario(spec, ov, [&spec](const Condition& c, Institution inst) {
    return std::optional<MarketSetup>(spec.setup(c, inst));
  });
}

ScenarioRun run_scenario(const ScenarioSpec& spec, const RunOverrides& ov,
                         const SetupFactory& make_setup) {
  ScenarioRun run;
  run.scenario = spec.name;
  run.params = spec.params;
  run.n_reps = ov.n_reps.value_or(spec.n_reps);
  run.seed = ov.seed.value_or(spec.seed);
  run.surplus = spec.output.surplus;
  run.efficiency = spec.output.efficiency;
  ReplicationOptions opts;
  opts.threads = ov.threads.value_or(spec.threads);
  opts.keep_digests = ov.keep_digests.value_or(spec.output.digests);
  for (Institution inst : spec.institutions) {
    for (const Condition& c : spec.conditions) {
      std::optional<MarketSetup> built = make_setup(c, inst);
      if (!built) continue;
      const MarketSetup& setup = *built;
      CellResult cell;
      cell.condition = c.name;
      cell.institution = inst;
      cell.report = run_replications(setup, run.n_reps, cell_seed(run.seed, c.name, inst), opts);
      cell.expected = expected_market(setup);
      run.cells.push_back(std::move(cell));
    }
  }
  return run;
}

// ---------------------------------------------------------------------------

namespace {

std::string money(const Ratio& cents) { return format_cents(cents); }

double fraud_at(const std::map<FraudKind, double>& m, FraudKind k) {
  auto it = m.find(k);
  return it == m.end() ? 0.0 : it->second;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Table metrics_table(const ScenarioRun& run) {
  Table t;
  t.columns = {"institution",        "condition",         "markets",
               "approach_share",     "honest_share",      "undertreatment",
               "overtreatment",      "overcharging",      "expert_any_fraud",
               "efficiency",         "consumer_surplus",  "expert_surplus",
               "delta",              "cf_approach_share", "cf_efficiency",
               "cf_consumer_surplus", "cf_expert_surplus", "cf_delta"};
  t.numeric.assign(t.columns.size(), true);
  t.numeric[0] = t.numeric[1] = false;
  const MarketParams& p = run.params;
  for (const CellResult& c : run.cells) {
    MetricSet m = compute_metrics(c.report.tally, p, run.surplus, run.efficiency);
    std::vector<std::string> row = {
        std::string(to_string(c.institution)),
        c.condition,
        std::to_string(m.markets),
        format_share(m.approach_rate),
        format_share(c.report.tally.served == 0 ? 0.0 : 1.0 - m.fraud.any_per_decision),
        format_share(fraud_at(m.fraud.conditional, FraudKind::Undertreatment)),
        format_share(fraud_at(m.fraud.conditional, FraudKind::Overtreatment)),
        format_share(fraud_at(m.fraud.conditional, FraudKind::Overcharging)),
        format_share(m.fraud.expert_any),
        format_share(m.relative_efficiency),
        money(m.consumer_surplus),
        money(m.expert_surplus),
        money(m.delta)};
    if (c.expected) {
      Ratio cs = c.expected->consumer_surplus, es = c.expected->expert_surplus;
      if (run.surplus == SurplusMode::PerCapita) {
        cs /= p.n_consumers;
        es /= p.n_experts;
      }
      row.push_back(format_share(ratio_to_double(c.expected->approach_rate)));
      row.push_back(format_share(ratio_to_double(c.expected->efficiency())));
      row.push_back(money(cs));
      row.push_back(money(es));
      row.push_back(money(cs - es));
    } else {
      row.insert(row.end(), 5, "");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table predictions_table(const PredictionReport& report) {
  Table t;
  t.columns = {"cell",   "expected",   "institution", "objective", "transparent", "prices",
               "p_low",  "p_high",     "breakdown",   "consumer",  "expert",      "total",
               "pass"};
  t.numeric = {false, false, false, false, false, false, true, true, false, true, true, true, false};
  for (const PredictionCheck& c : report.checks) {
    for (const EquilibriumResult& r : c.results) {
      t.rows.push_back({c.cell,
                        c.expected,
                        std::string(to_string(r.institution)),
                        std::string(to_string(r.objective)),
                        r.transparent ? "true" : "false",
                        r.prices_label(),
                        r.p_low ? std::to_string(*r.p_low) : "",
                        r.p_high ? std::to_string(*r.p_high) : "",
                        r.market_breaks_down ? "true" : "false",
                        money(r.consumer),
                        money(r.expert),
                        money(r.total_income),
                        c.pass ? "true" : "false"});
    }
  }
  return t;
}

void write_csv(std::ostream& out, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    out << (i ? "," : "") << csv_escape(t.columns[i]);
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_escape(row[i]);
    out << "\n";
  }
}

void write_json(std::ostream& out, const Table& t, const std::string& title) {
  ordered_json doc;
  doc["title"] = title;
  doc["columns"] = t.columns;
  ordered_json rows = ordered_json::array();
  for (const auto& row : t.rows) {
    ordered_json r = ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const std::string& v = row[i];
      if (v.empty()) r[t.columns[i]] = nullptr;
      else if (t.numeric[i] && v.find('.') == std::string::npos) r[t.columns[i]] = std::stoll(v);
      else if (t.numeric[i]) r[t.columns[i]] = std::stod(v);
      else if (v == "true" || v == "false") r[t.columns[i]] = v == "true";
      else r[t.columns[i]] = v;
    }
    rows.push_back(std::move(r));
  }
  doc["rows"] = std::move(rows);
  out << doc.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Digests.

namespace {

ExpertAction parse_action(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) throw std::invalid_argument("bad action '" + s + "'");
  return {parse_treatment(s.substr(0, slash)), parse_tier(s.substr(slash + 1))};
}

ordered_json pair_json(PricePair p) { return ordered_json::array({p.low, p.high}); }

PricePair pair_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

}  // namespace

std::string digest_json(const MarketOutcome& o, const std::string& condition, std::int64_t rep) {
  ordered_json j;
  j["condition"] = condition;
  j["rep"] = rep;
  j["institution"] = to_string(o.institution);
  j["transparency"] = o.transparency;
  ordered_json offers = ordered_json::array();
  for (const ExpertOffer& f : o.offers) {
    ordered_json e = {{"expert", f.expert_index}, {"prices", pair_json(f.prices)},
                      {"delegated", f.delegated}};
    if (f.disclosed_objective) e["objective"] = to_string(*f.disclosed_objective);
    offers.push_back(std::move(e));
  }
  j["offers"] = std::move(offers);
  ordered_json strategies = ordered_json::array();
  for (std::size_t e = 0; e < o.strategies.size(); ++e) {
    ordered_json slots = ordered_json::array();
    for (const SlotRule& r : o.strategies[e].slots)
      slots.push_back({r.small.to_string(), r.big.to_string()});
    ordered_json s = {{"prices", pair_json(o.strategies[e].prices)}, {"slots", slots}};
    if (e < o.llm_objectives.size() && o.llm_objectives[e])
      s["llm_objective"] = to_string(*o.llm_objectives[e]);
    strategies.push_back(std::move(s));
  }
  j["strategies"] = std::move(strategies);
  ordered_json choices = ordered_json::array(), problems = ordered_json::array(),
               actions = ordered_json::array(), cpay = ordered_json::array(),
               epay = ordered_json::array();
  for (const ConsumerChoice& c : o.choices)
    choices.push_back(c.expert ? ordered_json(*c.expert) : ordered_json(nullptr));
  for (ProblemType p : o.problems) problems.push_back(to_string(p));
  for (const auto& a : o.actions)
    actions.push_back(a ? ordered_json(a->to_string()) : ordered_json(nullptr));
  for (Money m : o.consumer_payoffs) cpay.push_back(m.cents());
  for (Money m : o.expert_payoffs) epay.push_back(m.cents());
  j["choices"] = std::move(choices);
  j["problems"] = std::move(problems);
  j["actions"] = std::move(actions);
  j["consumer_payoffs_cents"] = std::move(cpay);
  j["expert_payoffs_cents"] = std::move(epay);
  j["optout_count"] = o.optout_count;
  return j.dump();
}

std::vector<DigestRecord> read_digests(std::istream& in) {
  std::vector<DigestRecord> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      DigestRecord d;
      d.condition = j.at("condition").get<std::string>();
      d.rep = j.at("rep").get<std::int64_t>();
      MarketOutcome& o = d.outcome;
      o.institution = parse_institution(j.at("institution").get<std::string>());
      o.transparency = j.at("transparency").get<bool>();
      for (const json& f : j.at("offers")) {
        ExpertOffer e;
        e.expert_index = f.at("expert").get<std::size_t>();
        e.prices = pair_from(f.at("prices"));
        e.delegated = f.at("delegated").get<bool>();
        if (f.contains("objective")) e.disclosed_objective = parse_objective(f["objective"].get<std::string>());
        o.offers.push_back(e);
      }
      for (const json& s : j.at("strategies")) {
        ExpertStrategy st;
        st.prices = pair_from(s.at("prices"));
        for (const json& r : s.at("slots"))
          st.slots.push_back({parse_action(r.at(0)), parse_action(r.at(1))});
        o.strategies.push_back(std::move(st));
        o.llm_objectives.push_back(
            s.contains("llm_objective")
                ? std::optional<Objective>(parse_objective(s["llm_objective"].get<std::string>()))
                : std::nullopt);
      }
      for (const json& c : j.at("choices"))
        o.choices.push_back(c.is_null() ? ConsumerChoice::opt_out()
                                        : ConsumerChoice::approach(c.get<std::size_t>()));
      for (const json& p : j.at("problems")) o.problems.push_back(parse_problem(p.get<std::string>()));
      for (const json& a : j.at("actions"))
        o.actions.push_back(a.is_null() ? std::nullopt
                                        : std::optional<ExpertAction>(parse_action(a)));
      for (std::size_t i = 0; i < o.actions.size(); ++i)
        o.fraud.push_back(o.actions[i] ? classify_fraud(o.problems.at(i), *o.actions[i]) : FraudSet{});
      for (const json& m : j.at("consumer_payoffs_cents"))
        o.consumer_payoffs.push_back(Money::from_cents(m.get<std::int64_t>()));
      for (const json& m : j.at("expert_payoffs_cents"))
        o.expert_payoffs.push_back(Money::from_cents(m.get<std::int64_t>()));
      o.optout_count = j.at("optout_count").get<int>();
      out.push_back(std::move(d));
    } catch (const std::exception& e) {
      throw std::invalid_argument("digest line " + std::to_string(no) + ": " + e.what());
    }
  }
  return out;
}

void write_digests(std::ostream& out, const ScenarioRun& run) {
  for (const CellResult& c : run.cells)
    for (std::size_t r = 0; r < c.report.digests.size(); ++r)
      out << digest_json(c.report.digests[r], c.condition, static_cast<std::int64_t>(r)) << "\n";
}

ScenarioRun run_from_digests(const std::vector<DigestRecord>& records, const MarketParams& params,
                             const std::string& name) {
  ScenarioRun run;
  run.scenario = name;
  run.params = params;
  std::map<std::pair<std::string, Institution>, std::size_t> index;
  for (const DigestRecord& d : records) {
    auto key = std::make_pair(d.condition, d.outcome.institution);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, run.cells.size()).first;
      CellResult c;
      c.condition = d.condition;
      c.institution = d.outcome.institution;
      run.cells.push_back(std::move(c));
    }
    CellResult& c = run.cells[it->second];
    c.report.tally.add(d.outcome, params);
    ++c.report.n_reps;
  }
  run.n_reps = static_cast<std::int64_t>(records.size());
  return run;
}

// ---------------------------------------------------------------------------

namespace {

template <typename F>
fs::path write_file(const fs::path& path, F body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  body(out);
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
  return path;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
}

}  // namespace

std::vector<fs::path> emit_results(const ScenarioRun& run, const OutputSpec& out,
                                   const std::string& stem) {
  ensure_dir(out.dir);
  std::vector<fs::path> written;
  Table t = metrics_table(run);
  if (out.csv)
    written.push_back(write_file(out.dir / (stem + ".metrics.csv"),
                                 [&](std::ostream& os) { write_csv(os, t); }));
  if (out.json)
    written.push_back(write_file(out.dir / (stem + ".metrics.json"),
                                 [&](std::ostream& os) { write_json(os, t, run.scenario); }));
  bool any_digests = false;
  for (const CellResult& c : run.cells) any_digests |= !c.report.digests.empty();
  if (out.digests && any_digests)
    written.push_back(write_file(out.dir / (stem + ".digests.ndjson"),
                                 [&](std::ostream& os) { write_digests(os, run); }));
  return written;
}

std::vector<fs::path> emit_predictions(const PredictionReport& report, const fs::path& dir,
                                       bool csv, bool json_out) {
  ensure_dir(dir);
  std::vector<fs::path> written;
  Table t = predictions_table(report);
  if (csv)
    written.push_back(write_file(dir / "predictions.csv", [&](std::ostream& os) { write_csv(os, t); }));
  if (json_out)
    written.push_back(write_file(dir / "predictions.json",
                                 [&](std::ostream& os) { write_json(os, t, "predictions"); }));
  return written;
}

}  // namespace credence
