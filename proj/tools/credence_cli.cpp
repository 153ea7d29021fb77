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

// credence: predictions, simulation, replay of human data, live LLM runs,
// the session service and reports from digests.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "credence/human_data.hpp"
#include "credence/llm_run.hpp"
#include "credence/report.hpp"
#include "credence/server.hpp"

namespace {

using namespace credence;

// Aligned plain-text rendering for the terminal.
void print_table(std::ostream& os, const Table& t) {
  std::vector<std::size_t> width(t.columns.size());
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    width[c] = t.columns[c].size();
    for (const auto& row : t.rows) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::string pad(width[c] - cells[c].size(), ' ');
      os << (c ? "  " : "") << (t.numeric[c] ? pad + cells[c] : cells[c] + pad);
    }
    os << "\n";
  };
  line(t.columns);
  for (const auto& row : t.rows) line(row);
}

void list_paths(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << "wrote " << p.string() << "\n";
}

struct CommonRun {
  std::optional<std::int64_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out;
  bool digests = false;
  std::string efficiency;
  std::string surplus;

  void add(CLI::App* app) {
    app->add_option("--reps", reps, "Replications per cell")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "Root seed");
    app->add_option("--threads", threads, "Worker threads (0: all cores)");
    app->add_option("--out", out, "Output directory (default: the scenario's)");
    app->add_flag("--digests", digests, "Also write per-replicate digests");
    app->add_option("--efficiency", efficiency, "realized | expected denominator")
        ->check(CLI::IsMember({"realized", "expected"}));
    app->add_option("--surplus", surplus, "group-total | per-capita")
        ->check(CLI::IsMember({"group-total", "per-capita"}));
  }

  RunOverrides overrides() const {
    RunOverrides o;
    o.n_reps = reps;
    o.seed = seed;
    o.threads = threads;
    if (digests) o.keep_digests = true;
    return o;
  }

  void apply(ScenarioSpec& spec) const {
    if (!out.empty()) spec.output.dir = out;
    if (digests) spec.output.digests = true;
    if (!efficiency.empty()) spec.output.efficiency = parse_efficiency_mode(efficiency);
    if (!surplus.empty()) spec.output.surplus = parse_surplus_mode(surplus);
  }
};

void emit(const ScenarioRun& run, const ScenarioSpec& spec, const std::string& stem) {
  print_table(std::cout, metrics_table(run));
  list_paths(emit_results(run, spec.output, stem));
}

std::string stem_of(const ScenarioSpec& spec) {
  return spec.name.empty() ? std::string("run") : spec.name;
}

int cmd_predict(const std::string& scenario, const std::string& out, bool csv, bool json) {
  MarketParams params = scenario.empty() ? MarketParams{} : load_scenario(scenario).params;
  auto t0 = std::chrono::steady_clock::now();
  PredictionReport report = verify_predictions(params);
  double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  print_table(std::cout, predictions_table(report));
  std::cout << report.passed() << "/" << report.checks.size() << " cells match the reference ("
            << static_cast<long>(ms) << " ms)\n";
  list_paths(emit_predictions(report, out, csv, json));
  return report.all_pass() ? 0 : 1;
}

int cmd_simulate(const std::string& file, const CommonRun& common) {
  ScenarioSpec spec = load_scenario(file);
  common.apply(spec);
  for (const Condition& c : spec.conditions)
    if (c.has_llm_seats()) {
      std::cerr << "condition '" << c.name << "' has LLM seats; use `credence llm-run`\n";
      return 2;
    }
  emit(run_scenario(spec, common.overrides()), spec, stem_of(spec));
  return 0;
}

int cmd_replay(const std::string& csv, const std::string& scenario, const CommonRun& common) {
  ScenarioSpec spec;
  if (!scenario.empty()) spec = load_scenario(scenario);
  IngestResult data = ingest_human_csv(csv, spec.params);
  std::cout << data.summary.to_text();
  if (scenario.empty()) {
    // Every institution with both roles present, fully replayed.
    spec.name = std::filesystem::path(csv).stem().string();
    spec.institutions.clear();
    for (Institution inst : kInstitutions) {
      const InstitutionSummary& s = data.summary.in(inst);
      if (s.experts > 0 && s.consumers > 0) spec.institutions.push_back(inst);
    }
    if (spec.institutions.empty()) {
      std::cerr << "no institution has both expert and consumer rows\n";
      return 2;
    }
    Condition c;
    c.name = "replay";
    for (int i = 0; i < spec.params.n_experts; ++i)
      c.experts.push_back(ExpertSeat{make_replay_expert(data.pool), std::nullopt, "replay"});
    for (int i = 0; i < spec.params.n_consumers; ++i)
      c.consumers.push_back(make_replay_consumer(data.pool));
    spec.conditions = {c};
  }
  common.apply(spec);
  emit(run_scenario(spec, common.overrides()), spec, stem_of(spec));
  return 0;
}

int cmd_llm_run(const std::string& file, const std::string& transcript, const CommonRun& common) {
  ScenarioSpec spec = load_scenario(file);
  common.apply(spec);
  std::filesystem::path tpath = transcript.empty() ? spec.llm.transcript : std::filesystem::path(transcript);
  if (tpath.has_parent_path()) std::filesystem::create_directories(tpath.parent_path());
  std::ofstream tout(tpath, std::ios::app);
  if (!tout) throw std::runtime_error("cannot open transcript " + tpath.string());
  TranscriptLog log(&tout);
  LlmScenarioResult r = run_llm_scenario(spec, make_client_from_env(), log, common.overrides());
  for (const LlmSeatResult& s : r.seats) {
    std::cout << s.session << ": ";
    if (s.run.disqualified) std::cout << "disqualified (" << s.run.reason << ")";
    else std::cout << "prices " << s.run.strategy->prices.to_string();
    std::cout << ", " << s.run.parse_failures << " parse retries\n";
  }
  for (const std::string& k : r.skipped) std::cout << "skipped " << k << "\n";
  std::cout << "transcript " << tpath.string() << "\n";
  if (r.run.cells.empty()) return 1;
  emit(r.run, spec, stem_of(spec));
  return 0;
}

std::atomic<bool> g_stop{false};

int cmd_serve(const std::string& file, const ServerOptions& options, std::uint64_t seed,
              const std::string& digest_log, bool llm, const std::string& transcript) {
  ServiceConfig config;
  config.scenario = load_scenario(file);
  config.seed = seed;
  config.digest_log = digest_log;
  std::ofstream tout;
  std::unique_ptr<TranscriptLog> log;
  if (llm) {
    tout.open(transcript.empty() ? config.scenario.llm.transcript.string() : transcript, std::ios::app);
    log = std::make_unique<TranscriptLog>(&tout);
    config.llm = make_llm_resolver(std::make_shared<LlmSeatPlayer>(
        config.scenario.params, config.scenario.llm, make_client_from_env(), *log));
  }
  SessionService service(std::move(config));
  SessionServer server(service, options);
  server.start();
  std::cout << "http://" << options.host << ":" << server.http_port() << "/api  ws://" << options.host
            << ":" << server.ws_port() << "/" << std::endl;
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  server.stop();
  std::cout << service.size() << " sessions\n";
  return 0;
}

int cmd_report(const std::string& digests, const std::string& scenario, const std::string& out,
               const std::string& stem) {
  ScenarioSpec spec;
  if (!scenario.empty()) spec = load_scenario(scenario);
  std::ifstream in(digests);
  if (!in) throw std::runtime_error("cannot read " + digests);
  auto records = read_digests(in);
  ScenarioRun run = run_from_digests(records, spec.params, stem);
  run.surplus = spec.output.surplus;
  run.efficiency = spec.output.efficiency;
  OutputSpec o = spec.output;
  o.digests = false;
  if (!out.empty()) o.dir = out;
  std::cout << records.size() << " markets\n";
  print_table(std::cout, metrics_table(run));
  list_paths(emit_results(run, o, stem));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Credence goods markets: predictions, simulation and live sessions"};
  app.require_subcommand(1);

  std::string scenario, out = "out", csv_path, transcript, digest_log, digests, stem = "report";
  bool no_csv = false, no_json = false, llm = false;
  CommonRun common;

  auto* predict = app.add_subcommand("predict", "Solve and check the benchmark predictions");
  predict->add_option("--scenario", scenario, "Take parameters from this scenario file");
  predict->add_option("--out", out, "Output directory");
  predict->add_flag("--no-csv", no_csv);
  predict->add_flag("--no-json", no_json);

  auto* simulate = app.add_subcommand("simulate", "Run a scenario file");
  simulate->add_option("scenario", scenario, "Scenario YAML")->required()->check(CLI::ExistingFile);
  common.add(simulate);

  auto* replay = app.add_subcommand("replay", "Ingest human data and replay it");
  replay->add_option("csv", csv_path, "Human-data CSV")->required()->check(CLI::ExistingFile);
  replay->add_option("--scenario", scenario, "Scenario using replay policies")->check(CLI::ExistingFile);
  common.add(replay);

  auto* llm_run = app.add_subcommand("llm-run", "Play LLM seats live, then simulate");
  llm_run->add_option("scenario", scenario, "Scenario YAML")->required()->check(CLI::ExistingFile);
  llm_run->add_option("--transcript", transcript, "Transcript log (default: the scenario's)");
  common.add(llm_run);

  ServerOptions server;
  std::uint64_t seed = 1;
  auto* serve = app.add_subcommand("serve", "Host interactive sessions over HTTP and WebSocket");
  serve->add_option("scenario", scenario, "Scenario YAML")->required()->check(CLI::ExistingFile);
  serve->add_option("--host", server.host);
  serve->add_option("--port", server.http_port);
  serve->add_option("--ws-port", server.ws_port);
  serve->add_option("--static", server.static_dir, "Directory with the browser client");
  serve->add_option("--seed", seed);
  serve->add_option("--digest-log", digest_log, "Append one digest per resolved session");
  serve->add_flag("--llm", llm, "Play LLM seats live (credentials from the environment)");
  serve->add_option("--transcript", transcript);

  auto* report = app.add_subcommand("report", "Rebuild metric tables from digests");
  report->add_option("digests", digests, "Digest file (.ndjson)")->required()->check(CLI::ExistingFile);
  report->add_option("--scenario", scenario, "Scenario for parameters and metric modes");
  report->add_option("--out", out, "Output directory");
  report->add_option("--stem", stem, "Output file stem");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*predict) return cmd_predict(scenario, out, !no_csv, !no_json);
    if (*simulate) return cmd_simulate(scenario, common);
    if (*replay) return cmd_replay(csv_path, scenario, common);
    if (*llm_run) return cmd_llm_run(scenario, transcript, common);
    if (*serve) return cmd_serve(scenario, server, seed, digest_log, llm, transcript);
    if (*report) return cmd_report(digests, scenario, report->count("--out") ? out : "", stem);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
