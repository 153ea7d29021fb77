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

#include "credence/session.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "credence/llm.hpp"
#include "credence/report.hpp"

namespace credence {

using nlohmann::json;

std::string_view to_string(SessionPhase p) {
  switch (p) {
    case SessionPhase::AwaitingExpertSetup: return "AwaitingExpertSetup";
    case SessionPhase::OffersPosted: return "OffersPosted";
    case SessionPhase::AwaitingConsumerChoice: return "AwaitingConsumerChoice";
    case SessionPhase::Resolved: return "Resolved";
  }
  return "?";
}

std::string_view to_string(HumanRole r) { return r == HumanRole::Consumer ? "consumer" : "expert"; }

HumanRole parse_human_role(std::string_view s) {
  if (s == "consumer") return HumanRole::Consumer;
  if (s == "expert") return HumanRole::Expert;
  throw std::invalid_argument("role must be consumer or expert, got '" + std::string(s) + "'");
}

json SessionError::to_json() const {
  json j = {{"error", code_}, {"message", what()}};
  if (phase_) j["phase"] = to_string(*phase_);
  return j;
}

std::string consumer_objective_label(Objective o, ObjectiveRegime regime) {
  if (regime == ObjectiveRegime::FixedSelfInterested) return std::string(fixed_objective_label());
  switch (o) {
    case Objective::NoObjective: return "no objective";
    case Objective::SelfInterested: return std::string(fixed_objective_label());
    case Objective::InequityAverse: return "only care about fairness between Player A and Player B";
    case Objective::EfficiencyLoving: return "maximize the total payoff of Player A and Player B";
  }
  return "";
}

namespace {

[[noreturn]] void bad_request(const std::string& msg) { throw SessionError(400, "bad_request", msg); }

ExpertAction action_from(const json& j, const char* field) {
  if (!j.is_object()) bad_request(std::string(field) + " must be an object");
  try {
    return {parse_treatment(j.at("treatment").get<std::string>()),
            parse_tier(j.at("charge").get<std::string>())};
  } catch (const std::exception& e) {
    bad_request(std::string(field) + ": " + e.what());
  }
}

std::string legality_rule(Institution inst) {
  switch (inst) {
    case Institution::NoInstitution: return "any treatment may be combined with any charge";
    case Institution::Verifiability:
      return "the charge must match the treatment provided (LCT at the small price, HCT at the "
             "big price)";
    case Institution::Liability: return "a big problem must receive the HCT";
  }
  return "";
}

std::string seat_name(char prefix, std::size_t i) { return std::string(1, prefix) + std::to_string(i + 1); }

double units(Money m) { return static_cast<double>(m.cents()) / 100.0; }

}  // namespace

ExpertSubmission ExpertSubmission::from_json(const json& j) {
  if (!j.is_object()) bad_request("expert submission must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    static const std::set<std::string> ok = {"delegate", "objective", "p_low", "p_high", "small", "big"};
    if (!ok.count(k)) bad_request("unknown field '" + k + "'");
    (void)v;
  }
  ExpertSubmission s;
  if (j.contains("delegate")) {
    if (!j["delegate"].is_boolean()) bad_request("delegate must be true or false");
    s.delegate = j["delegate"].get<bool>();
  }
  if (j.contains("objective")) {
    try {
      s.objective = parse_objective(j["objective"].get<std::string>());
    } catch (const std::exception& e) {
      bad_request(std::string("objective: ") + e.what());
    }
  }
  if (j.contains("p_low") || j.contains("p_high")) {
    if (!j.contains("p_low") || !j.contains("p_high") || !j["p_low"].is_number_integer() ||
        !j["p_high"].is_number_integer())
      bad_request("p_low and p_high must both be integers");
    s.prices = PricePair{j["p_low"].get<int>(), j["p_high"].get<int>()};
  }
  if (j.contains("small") || j.contains("big")) {
    if (!j.contains("small") || !j.contains("big")) bad_request("give both small and big actions");
    s.rule = SlotRule{action_from(j["small"], "small"), action_from(j["big"], "big")};
  }
  return s;
}

struct SessionService::Session {
  std::mutex mu;
  std::string id;
  std::uint64_t number = 0;
  HumanRole role = HumanRole::Consumer;
  std::string condition;
  Institution institution = Institution::NoInstitution;
  SessionPhase phase = SessionPhase::AwaitingExpertSetup;
  std::vector<SessionPhase> history;
  MarketSetup setup;
  RandomStream stream{0};
  std::optional<MarketOutcome> outcome;  // offers once posted, complete once resolved
  std::optional<Objective> delegated_objective;
  bool delegated = false;
};

SessionService::SessionService(ServiceConfig config) : config_(std::move(config)) {
  if (config_.scenario.conditions.empty()) throw std::invalid_argument("scenario has no conditions");
  if (config_.human_seat >= static_cast<std::size_t>(config_.scenario.params.n_experts) ||
      config_.human_seat >= static_cast<std::size_t>(config_.scenario.params.n_consumers))
    throw std::invalid_argument("human seat outside the market");
  if (!config_.digest_log.empty()) {
    log_.open(config_.digest_log, std::ios::app | std::ios::binary);
    if (!log_) throw std::runtime_error("cannot open digest log '" + config_.digest_log.string() + "'");
  }
}

json SessionService::cells() const {
  json out = json::array();
  for (Institution inst : config_.scenario.institutions)
    for (const Condition& c : config_.scenario.conditions)
      out.push_back({{"condition", c.name}, {"institution", to_string(inst)}});
  return {{"scenario", config_.scenario.name},
          {"transparency", config_.scenario.transparency},
          {"objective_regime", to_string(config_.scenario.objective_regime)},
          {"cells", out}};
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::shared_lock lock(registry_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw SessionError(404, "unknown_session", "no session '" + id + "'");
  return it->second;
}

void SessionService::advance(Session& s, SessionPhase next, std::vector<json>& events) {
  if (static_cast<int>(next) != static_cast<int>(s.phase) + 1)
    throw std::logic_error("session " + s.id + ": illegal transition " +
                           std::string(to_string(s.phase)) + " -> " + std::string(to_string(next)));
  s.phase = next;
  s.history.push_back(next);
  events.push_back({{"event", "phase"}, {"session", s.id}, {"phase", to_string(next)}});
}

void SessionService::publish(const std::vector<json>& events) {
  if (events.empty()) return;
  std::vector<PhaseListener> ls;
  {
    std::lock_guard lock(listeners_mu_);
    ls = listeners_;
  }
  for (const json& e : events)
    for (const auto& l : ls) l(e);
}

void SessionService::subscribe(PhaseListener listener) {
  std::lock_guard lock(listeners_mu_);
  listeners_.push_back(std::move(listener));
}

std::size_t SessionService::size() const {
  std::shared_lock lock(registry_mu_);
  return sessions_.size();
}

std::vector<std::string> SessionService::digests() const {
  std::lock_guard lock(log_mu_);
  return digests_;
}

json SessionService::view(const Session& s) const {
  json history = json::array();
  for (SessionPhase p : s.history) history.push_back(to_string(p));
  json v = {{"session", s.id},
            {"role", to_string(s.role)},
            {"condition", s.condition},
            {"institution", to_string(s.institution)},
            {"transparency", s.setup.transparency},
            {"seat", seat_name(s.role == HumanRole::Consumer ? 'B' : 'A', config_.human_seat)},
            {"phase", to_string(s.phase)},
            {"history", history}};
  // Consumers learn about objectives only through transparency.
  if (s.role == HumanRole::Expert || s.setup.transparency)
    v["objective_regime"] = to_string(config_.scenario.objective_regime);
  return v;
}

json SessionService::create(HumanRole role, const std::string& condition, Institution inst) {
  const ScenarioSpec& sc = config_.scenario;
  const Condition* cond = nullptr;
  for (const Condition& c : sc.conditions)
    if (c.name == condition) cond = &c;
  if (!cond) bad_request("unknown condition '" + condition + "'");
  if (std::find(sc.institutions.begin(), sc.institutions.end(), inst) == sc.institutions.end())
    bad_request("institution " + std::string(to_string(inst)) + " is not offered by this scenario");

  auto s = std::make_shared<Session>();
  {
    std::unique_lock lock(registry_mu_);
    s->number = next_++;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(s->number));
  s->id = buf;
  s->role = role;
  s->condition = cond->name;
  s->institution = inst;
  s->history = {SessionPhase::AwaitingExpertSetup};
  s->stream = RandomStream(config_.seed).child("session", s->number);

  s->setup.params = sc.params;
  s->setup.institution = inst;
  s->setup.transparency = sc.transparency;
  for (std::size_t e = 0; e < cond->experts.size(); ++e) {
    const ExpertSeat& seat = cond->experts[e];
    if (role == HumanRole::Expert && e == config_.human_seat) {
      s->setup.experts.push_back(nullptr);  // filled by the submission
    } else if (seat.policy) {
      s->setup.experts.push_back(seat.policy);
    } else {
      if (!config_.llm)
        throw SessionError(503, "llm_unavailable",
                           "condition '" + cond->name + "' has LLM seats but no LLM client is configured");
      s->setup.experts.push_back(config_.llm(*seat.llm, inst, s->id + "/A" + std::to_string(e + 1)));
    }
  }
  s->setup.consumers = cond->consumers;

  std::vector<json> events;
  json result;
  {
    std::lock_guard lock(s->mu);
    if (role == HumanRole::Consumer) {
      s->outcome = post_offers(s->setup, s->stream);
      advance(*s, SessionPhase::OffersPosted, events);
    }
    result = view(*s);
    std::unique_lock reg(registry_mu_);
    sessions_[s->id] = s;
  }
  publish(events);
  return result;
}

json SessionService::create(const json& request) {
  if (!request.is_object()) bad_request("expected a JSON object");
  try {
    HumanRole role = parse_human_role(request.at("role").get<std::string>());
    std::string condition = request.contains("condition")
                                ? request["condition"].get<std::string>()
                                : config_.scenario.conditions.front().name;
    Institution inst = request.contains("institution")
                           ? parse_institution(request["institution"].get<std::string>())
                           : config_.scenario.institutions.front();
    return create(role, condition, inst);
  } catch (const SessionError&) {
    throw;
  } catch (const std::exception& e) {
    bad_request(e.what());
  }
}

json SessionService::state(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return view(*s);
}

json SessionService::consumer_offers(const Session& s) const {
  json offers = json::array();
  for (const ExpertOffer& o : s.outcome->offers) {
    json e = {{"expert", seat_name('A', o.expert_index)},
              {"p_low", o.prices.low},
              {"p_high", o.prices.high},
              {"delegated", o.delegated}};
    // disclosed_objective is only ever set when transparency is on.
    if (o.disclosed_objective)
      e["objective"] = consumer_objective_label(*o.disclosed_objective, config_.scenario.objective_regime);
    offers.push_back(std::move(e));
  }
  return offers;
}

json SessionService::offers(const std::string& id) {
  auto s = find(id);
  std::vector<json> events;
  json out;
  {
    std::lock_guard lock(s->mu);
    if (s->phase == SessionPhase::AwaitingExpertSetup)
      throw SessionError(409, "wrong_phase",
                         "offers are not posted yet; the session is in AwaitingExpertSetup", s->phase);
    if (s->role == HumanRole::Consumer && s->phase == SessionPhase::OffersPosted)
      advance(*s, SessionPhase::AwaitingConsumerChoice, events);
    out = {{"session", s->id}, {"phase", to_string(s->phase)}, {"offers", consumer_offers(*s)}};
    if (s->role == HumanRole::Consumer)
      out["outside_option"] = units(config_.scenario.params.outside_option);
  }
  publish(events);
  return out;
}

json SessionService::objective_choices(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  if (s->role != HumanRole::Expert)
    throw SessionError(409, "wrong_role", "objective choices are offered to experts only", s->phase);
  json list = json::array();
  if (config_.scenario.objective_regime == ObjectiveRegime::FixedSelfInterested) {
    list.push_back({{"objective", to_string(Objective::SelfInterested)},
                    {"prompt", fixed_objective_label()}});
  } else {
    for (Objective o : credence::objective_choices())
      list.push_back({{"objective", to_string(o)}, {"prompt", objective_display(o)}});
  }
  return {{"session", s->id},
          {"objective_regime", to_string(config_.scenario.objective_regime)},
          {"choices", list}};
}

void SessionService::resolve(Session& s, std::vector<json>& events) {
  resolve_market(s.setup, s.stream, *s.outcome);
  advance(s, SessionPhase::Resolved, events);
  std::string line = digest_json(*s.outcome, s.condition, static_cast<std::int64_t>(s.number));
  std::lock_guard lock(log_mu_);
  digests_.push_back(line);
  if (log_.is_open()) {
    log_ << line << "\n";
    log_.flush();
  }
}

json SessionService::choose(const std::string& id, std::optional<std::size_t> expert) {
  auto s = find(id);
  std::vector<json> events;
  json out;
  {
    std::lock_guard lock(s->mu);
    if (s->role != HumanRole::Consumer)
      throw SessionError(409, "wrong_role", "only consumer sessions choose an expert", s->phase);
    if (s->phase != SessionPhase::AwaitingConsumerChoice)
      throw SessionError(409, "wrong_phase",
                         "a choice is accepted in AwaitingConsumerChoice (fetch the offers first); "
                         "the session is in " + std::string(to_string(s->phase)),
                         s->phase);
    if (expert && *expert >= s->outcome->offers.size())
      throw SessionError(422, "no_such_expert",
                         "there is no expert A" + std::to_string(*expert + 1), s->phase);
    s->setup.consumers[config_.human_seat] = make_fixed_choice(expert);
    resolve(*s, events);
    out = view(*s);
  }
  publish(events);
  return out;
}

json SessionService::choose(const std::string& id, const json& request) {
  if (!request.is_object() || !request.contains("choice") || !request["choice"].is_string())
    bad_request("expected {\"choice\": \"A1\"..\"A" + std::to_string(config_.scenario.params.n_experts) +
                "\" or \"optout\"}");
  std::string c = request["choice"].get<std::string>();
  std::string k = c;
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (k == "optout" || k == "opt-out") return choose(id, std::optional<std::size_t>());
  if (k.size() >= 2 && k[0] == 'a' && std::all_of(k.begin() + 1, k.end(), ::isdigit)) {
    long n = std::stol(k.substr(1));
    if (n >= 1) return choose(id, std::optional<std::size_t>(n - 1));
  }
  bad_request("unrecognized choice '" + c + "'");
}

json SessionService::submit(const std::string& id, const ExpertSubmission& sub) {
  auto s = find(id);
  std::vector<json> events;
  json out;
  {
    std::lock_guard lock(s->mu);
    if (s->role != HumanRole::Expert)
      throw SessionError(409, "wrong_role", "only expert sessions submit a setup", s->phase);
    if (s->phase != SessionPhase::AwaitingExpertSetup)
      throw SessionError(409, "wrong_phase",
                         "the setup was already submitted; the session is in " +
                             std::string(to_string(s->phase)),
                         s->phase);
    const ObjectiveRegime regime = config_.scenario.objective_regime;
    const MarketParams& params = config_.scenario.params;
    ExpertPolicyPtr policy;
    if (sub.delegate) {
      if (sub.prices || sub.rule)
        throw SessionError(400, "bad_request", "a delegating expert does not set prices or actions",
                           s->phase);
      Objective obj = Objective::SelfInterested;
      if (regime == ObjectiveRegime::FixedSelfInterested) {
        if (sub.objective && *sub.objective != Objective::SelfInterested)
          throw SessionError(422, "objective_fixed",
                             "the objective is fixed to \"" + std::string(fixed_objective_label()) +
                                 "\" in this scenario",
                             s->phase);
      } else {
        if (!sub.objective)
          throw SessionError(400, "bad_request", "choose one of the four objective prompts",
                             s->phase);
        obj = *sub.objective;
      }
      ExpertPolicyPtr acting =
          config_.llm ? config_.llm(LlmSeat{obj, std::nullopt, ""}, s->institution, s->id + "/delegate")
                      : make_scripted(scripted_llm_profile(ScriptedSource::HumanAIHuman, obj));
      policy = std::make_shared<ExpertPolicy>("human-delegated",
                                              ExpertPolicy::Delegated{acting, true, obj});
      s->delegated = true;
      s->delegated_objective = obj;
    } else {
      if (sub.objective)
        throw SessionError(400, "bad_request", "an objective applies only when delegating", s->phase);
      if (!sub.prices || !sub.rule)
        throw SessionError(400, "bad_request",
                           "set p_low, p_high and the small and big actions, or delegate", s->phase);
      if (!is_valid(params, *sub.prices))
        throw SessionError(422, "invalid_prices",
                           "prices " + sub.prices->to_string() + " must lie on " +
                               std::to_string(params.price_min) + ".." +
                               std::to_string(params.price_max) + " with p_low <= p_high",
                           s->phase);
      for (ProblemType p : kProblemTypes) {
        ExpertAction a = sub.rule->for_problem(p);
        if (!is_legal(s->institution, p, a))
          throw SessionError(422, "illegal_action",
                             a.to_string() + " on a " + std::string(to_string(p)) +
                                 " problem is not allowed under " +
                                 std::string(to_string(s->institution)) + ": " +
                                 legality_rule(s->institution),
                             s->phase);
      }
      ExpertStrategy st{*sub.prices,
                        std::vector<SlotRule>(static_cast<std::size_t>(params.n_consumers), *sub.rule)};
      policy = make_planned(std::move(st), "human");
    }
    s->setup.experts[config_.human_seat] = policy;
    s->outcome = post_offers(s->setup, s->stream);
    advance(*s, SessionPhase::OffersPosted, events);
    advance(*s, SessionPhase::AwaitingConsumerChoice, events);
    resolve(*s, events);
    out = view(*s);
  }
  publish(events);
  return out;
}

json SessionService::outcome(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  if (s->phase != SessionPhase::Resolved)
    throw SessionError(409, "wrong_phase",
                       "the outcome is revealed once the session is Resolved; it is in " +
                           std::string(to_string(s->phase)),
                       s->phase);
  const MarketOutcome& o = *s->outcome;
  const std::size_t seat = config_.human_seat;
  json out = view(*s);
  if (s->role == HumanRole::Consumer) {
    const ConsumerChoice& c = o.choices[seat];
    out["choice"] = c.expert ? seat_name('A', *c.expert) : "optout";
    out["payoff"] = units(o.consumer_payoffs[seat]);
    out["payoff_cents"] = o.consumer_payoffs[seat].cents();
    if (c.expert) {
      const ExpertAction a = *o.actions[seat];
      out["problem"] = to_string(o.problems[seat]);
      out["treatment"] = to_string(a.treatment);
      out["charge"] = to_string(a.tier);
      out["price_paid"] = o.strategies[*c.expert].prices.charged(a.tier).cents() / 100.0;
      out["solved"] = solves(a.treatment, o.problems[seat]);
    }
  } else {
    json visits = json::array();
    for (std::size_t j = 0; j < o.choices.size(); ++j) {
      if (o.choices[j].expert != seat) continue;
      InteractionPayoffs p =
          interaction_payoffs(config_.scenario.params, o.problems[j], o.strategies[seat].prices, *o.actions[j]);
      visits.push_back({{"consumer", seat_name('B', j)},
                        {"problem", to_string(o.problems[j])},
                        {"treatment", to_string(o.actions[j]->treatment)},
                        {"charge", to_string(o.actions[j]->tier)},
                        {"payoff", units(p.expert)}});
    }
    out["visits"] = visits;
    out["payoff"] = units(o.expert_payoffs[seat]);
    out["payoff_cents"] = o.expert_payoffs[seat].cents();
    out["p_low"] = o.strategies[seat].prices.low;
    out["p_high"] = o.strategies[seat].prices.high;
    out["delegated"] = s->delegated;
    if (s->delegated_objective) out["objective"] = to_string(*s->delegated_objective);
  }
  return out;
}

}  // namespace credence
