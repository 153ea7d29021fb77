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

// Live one-round sessions with one human seat. Transport-agnostic: every call
// takes and returns JSON, and failures carry an HTTP-style status.
//
// Phases advance strictly in order:
//
//   AwaitingExpertSetup -> OffersPosted -> AwaitingConsumerChoice -> Resolved
//
// Consumer sessions: offers are posted at creation; fetching them moves the
// session to AwaitingConsumerChoice; the choice resolves the market.
// Expert sessions: the setup (delegation or own prices and actions) posts the
// offers; simulated consumers then choose and the market resolves.
// Outcomes are readable only once Resolved.

#ifndef CREDENCE_SESSION_HPP_
#define CREDENCE_SESSION_HPP_

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "credence/scenario.hpp"
#include "json.hpp"

namespace credence {

enum class SessionPhase { AwaitingExpertSetup, OffersPosted, AwaitingConsumerChoice, Resolved };
enum class HumanRole { Consumer, Expert };

std::string_view to_string(SessionPhase p);
std::string_view to_string(HumanRole r);
HumanRole parse_human_role(std::string_view s);

class SessionError : public std::runtime_error {
 public:
  // status: 400 bad request, 404 unknown, 409 wrong phase or role,
  // 422 illegal submission, 503 unavailable.
  SessionError(int status, std::string code, const std::string& message,
               std::optional<SessionPhase> phase = std::nullopt)
      : std::runtime_error(message), status_(status), code_(std::move(code)), phase_(phase) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }
  std::optional<SessionPhase> phase() const { return phase_; }
  nlohmann::json to_json() const;

 private:
  int status_;
  std::string code_;
  std::optional<SessionPhase> phase_;
};

struct ExpertSubmission {
  bool delegate = false;
  std::optional<Objective> objective;  // delegation under ChosenObjective
  std::optional<PricePair> prices;     // own play
  std::optional<SlotRule> rule;        // own play, applied to every slot

  // {"delegate": true, "objective": "EfficiencyLoving"} or
  // {"delegate": false, "p_low": 3, "p_high": 7,
  //  "small": {"treatment": "LCT", "charge": "low"}, "big": {...}}
  static ExpertSubmission from_json(const nlohmann::json& j);
};

// Plays an LLM seat for one session; returns the resulting policy.
using LlmSeatResolver = std::function<ExpertPolicyPtr(
    const LlmSeat& seat, Institution inst, const std::string& session)>;

struct ServiceConfig {
  ScenarioSpec scenario;
  std::uint64_t seed = 1;
  std::size_t human_seat = 0;
  std::filesystem::path digest_log;  // empty: keep digests in memory only
  LlmSeatResolver llm;               // needed only for LLM seats
};

// Called after each phase change, outside the session lock. The payload
// holds only the session id and phase names.
using PhaseListener = std::function<void(const nlohmann::json& event)>;

// Thread-safe. Each session is updated under its own mutex; the registry
// lock is held only to find or insert sessions.
class SessionService {
 public:
  explicit SessionService(ServiceConfig config);

  nlohmann::json cells() const;
  nlohmann::json create(HumanRole role, const std::string& condition, Institution inst);
  nlohmann::json create(const nlohmann::json& request);
  nlohmann::json state(const std::string& id) const;
  nlohmann::json offers(const std::string& id);
  nlohmann::json objective_choices(const std::string& id) const;
  nlohmann::json choose(const std::string& id, std::optional<std::size_t> expert);
  nlohmann::json choose(const std::string& id, const nlohmann::json& request);
  nlohmann::json submit(const std::string& id, const ExpertSubmission& submission);
  nlohmann::json outcome(const std::string& id) const;

  void subscribe(PhaseListener listener);
  std::size_t size() const;
  // One line per resolved session, in resolution order.
  std::vector<std::string> digests() const;

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;
  void advance(Session& s, SessionPhase next, std::vector<nlohmann::json>& events);
  void resolve(Session& s, std::vector<nlohmann::json>& events);
  void publish(const std::vector<nlohmann::json>& events);
  nlohmann::json view(const Session& s) const;
  nlohmann::json consumer_offers(const Session& s) const;

  ServiceConfig config_;
  mutable std::shared_mutex registry_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_ = 0;

  mutable std::mutex log_mu_;
  std::ofstream log_;
  std::vector<std::string> digests_;

  std::mutex listeners_mu_;
  std::vector<PhaseListener> listeners_;
};

// Text consumers see for a delegated expert's objective.
std::string consumer_objective_label(Objective o, ObjectiveRegime regime);

}  // namespace credence

#endif  // CREDENCE_SESSION_HPP_
