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

#include "credence/llm_run.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace credence {
namespace {

std::string read_file(const std::filesystem::path& p, const char* what) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error(std::string("cannot read ") + what + " " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string cell_key(const std::string& condition, Institution inst) {
  return condition + "/" + std::string(to_string(inst));
}

}  // namespace

std::string load_training_block(const LlmSeat& seat, const MarketParams& params) {
  if (!seat.training) return "";
  std::string text = read_file(seat.training_data, "training data");
  // Keep only the rows; the header is regenerated for the declared source.
  std::string rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("Player A", 0) == 0 || line.rfind("OptOut", 0) == 0) rows += line + "\n";
  std::vector<HistoryRecord> records;
  std::size_t i = 0;
  std::istringstream rin(rows);
  while (std::getline(rin, line)) records.push_back(parse_history_row(line, params, i++));
  if (records.empty())
    throw std::runtime_error("training data " + seat.training_data + " has no history rows");
  HistorySource source = *seat.training == TrainingSource::HumanTrained ? HistorySource::HumanHuman
                                                                        : HistorySource::AIAI;
  return encode_history(records, source, params);
}

LlmSeatPlayer::LlmSeatPlayer(MarketParams params, LlmSettings settings, ChatClientPtr client,
                             TranscriptLog& log)
    : params_(std::move(params)), settings_(std::move(settings)), client_(std::move(client)),
      log_(log) {
  instructions_ = read_file(settings_.templates / "expert.txt", "instruction template");
  comprehension_ = ComprehensionSet::load((settings_.templates / "comprehension_expert.json").string());
}

AgentConfig LlmSeatPlayer::config_for(const LlmSeat& seat, Institution inst) const {
  AgentConfig cfg;
  cfg.params = params_;
  cfg.institution = inst;
  cfg.objective = seat.objective;
  cfg.framing = settings_.framing;
  cfg.training = seat.training;
  cfg.training_data = load_training_block(seat, params_);
  cfg.instructions = render_template(instructions_, template_values(params_, inst, settings_.framing));
  cfg.comprehension = comprehension_;
  cfg.model = settings_.model;
  cfg.temperature = settings_.temperature;
  cfg.max_parse_retries = settings_.max_parse_retries;
  return cfg;
}

ExpertPolicyPtr LlmSeatPlayer::play(const LlmSeat& seat, Institution inst, const std::string& session,
                                    const std::string& condition, std::size_t index) {
  AgentConfig cfg = config_for(seat, inst);
  LlmSeatResult r;
  r.session = session;
  r.condition = condition;
  r.institution = inst;
  r.seat = index;
  r.objective = seat.objective;
  r.run = run_llm_expert(*client_, cfg, log_, session);
  {
    std::lock_guard lock(mu_);
    results_.push_back(r);
  }
  if (r.run.disqualified || !r.run.strategy)
    throw LlmSeatDisqualified(session + " disqualified: " + r.run.reason);
  return make_planned(*r.run.strategy, "llm:" + std::string(to_string(seat.objective)));
}

std::vector<LlmSeatResult> LlmSeatPlayer::results() const {
  std::lock_guard lock(mu_);
  return results_;
}

LlmSeatResolver make_llm_resolver(std::shared_ptr<LlmSeatPlayer> player) {
  return [player](const LlmSeat& seat, Institution inst, const std::string& session) {
    try {
      return player->play(seat, inst, session);
    } catch (const LlmSeatDisqualified& e) {
      throw SessionError(503, "llm_disqualified", e.what());
    } catch (const TransportError& e) {
      throw SessionError(503, "llm_unavailable", e.what());
    }
  };
}

LlmScenarioResult run_llm_scenario(const ScenarioSpec& spec, ChatClientPtr client,
                                   TranscriptLog& log, const RunOverrides& overrides) {
  LlmSeatPlayer player(spec.params, spec.llm, std::move(client), log);

  struct Job {
    const Condition* condition;
    Institution inst;
    std::size_t seat;
    std::string session;
  };
  std::vector<Job> jobs;
  for (Institution inst : spec.institutions)
    for (const Condition& c : spec.conditions)
      for (std::size_t e = 0; e < c.experts.size(); ++e)
        if (c.experts[e].llm)
          jobs.push_back({&c, inst, e, spec.name + "/" + cell_key(c.name, inst) + "/A" +
                                           std::to_string(e + 1)});

  std::map<std::pair<std::string, std::size_t>, ExpertPolicyPtr> played;  // (cell, seat)
  std::map<std::string, std::string> failed;                              // cell -> reason
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::exception_ptr transport;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < jobs.size();) {
      const Job& j = jobs[i];
      std::string key = cell_key(j.condition->name, j.inst);
      try {
        ExpertPolicyPtr p =
            player.play(*j.condition->experts[j.seat].llm, j.inst, j.session, j.condition->name, j.seat);
        std::lock_guard lock(mu);
        played[{key, j.seat}] = p;
      } catch (const LlmSeatDisqualified& e) {
        std::lock_guard lock(mu);
        failed.emplace(key, e.what());
      } catch (...) {
        std::lock_guard lock(mu);
        if (!transport) transport = std::current_exception();
        next = jobs.size();
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(jobs.size(), static_cast<std::size_t>(std::max(1, spec.llm.parallel)));
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (transport) std::rethrow_exception(transport);

  LlmScenarioResult out;
  out.run = run_scenario(spec, overrides, [&](const Condition& c, Institution inst) {
    std::string key = cell_key(c.name, inst);
    if (failed.count(key)) {
      out.skipped.push_back(key);
      return std::optional<MarketSetup>();
    }
    MarketSetup m;
    m.params = spec.params;
    m.institution = inst;
    m.transparency = spec.transparency;
    for (std::size_t e = 0; e < c.experts.size(); ++e)
      m.experts.push_back(c.experts[e].llm ? played.at({key, e}) : c.experts[e].policy);
    m.consumers = c.consumers;
    return std::optional<MarketSetup>(std::move(m));
  });
  out.seats = player.results();
  std::sort(out.seats.begin(), out.seats.end(),
            [](const LlmSeatResult& a, const LlmSeatResult& b) { return a.session < b.session; });
  return out;
}

}  // namespace credence
