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

#include <atomic>
#include <random>
#include <thread>

#include "credence/report.hpp"
#include "credence/session.hpp"
#include "doctest.h"

using namespace credence;
using nlohmann::json;

namespace {

ServiceConfig config_for(const std::string& yaml, std::uint64_t seed = 7) {
  ServiceConfig c;
  c.scenario = parse_scenario(yaml, "session.yaml");
  c.seed = seed;
  return c;
}

std::string delegating_market(const char* regime, bool transparent) {
  return std::string("institutions: [NoInstitution, Verifiability, Liability]\n") +
         "transparency: " + (transparent ? "true" : "false") + "\n" +
         "objective_regime: " + regime + "\n"
         "experts:\n"
         "  - {policy: delegation, human: {policy: mixture}, rate: 1.0, count: 4}\n"
         "consumers: [{policy: transparency-aware, count: 4}]\n"
         "conditions: [{name: all-delegate}]\n";
}

const char* kPlain =
    "institutions: [NoInstitution, Verifiability, Liability]\n"
    "experts: [{policy: scripted, profile: NoTraining, count: 4}]\n"
    "consumers: [{policy: threshold, count: 4}]\n"
    "conditions: [{name: plain}]\n";

int status_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const SessionError& e) {
    return e.status();
  }
  return 200;
}

bool mentions_objective(const std::string& text) {
  for (const char* word : {"objective", "SelfInterested", "EfficiencyLoving", "InequityAverse",
                           "maximize", "payoff of", "efficien"})
    if (text.find(word) != std::string::npos) return true;
  return false;
}

int rank(const std::string& phase) {
  if (phase == "AwaitingExpertSetup") return 0;
  if (phase == "OffersPosted") return 1;
  if (phase == "AwaitingConsumerChoice") return 2;
  if (phase == "Resolved") return 3;
  return -1;
}

}  // namespace

TEST_SUITE("session") {

TEST_CASE("consumer walk-through") {
  SessionService svc(config_for(kPlain));
  json s = svc.create(HumanRole::Consumer, "plain", Institution::Liability);
  const std::string id = s["session"];
  CHECK(id == "s000000");
  CHECK(s["phase"] == "OffersPosted");
  CHECK(s["seat"] == "B1");
  CHECK(status_of([&] { svc.choose(id, std::optional<std::size_t>(0)); }) == 409);
  CHECK(status_of([&] { svc.outcome(id); }) == 409);
  json offers = svc.offers(id);
  CHECK(offers["phase"] == "AwaitingConsumerChoice");
  CHECK(offers["offers"].size() == 4);
  CHECK(offers["outside_option"] == 1.6);
  CHECK(status_of([&] { svc.choose(id, json{{"choice", "A9"}}); }) == 422);
  CHECK(status_of([&] { svc.choose(id, json{{"choice", "B2"}}); }) == 400);
  json done = svc.choose(id, json{{"choice", "A2"}});
  CHECK(done["phase"] == "Resolved");
  json out = svc.outcome(id);
  CHECK(out["choice"] == "A2");
  CHECK(out.contains("treatment"));
  CHECK(out["history"].size() == 4);
  CHECK(status_of([&] { svc.choose(id, std::optional<std::size_t>(1)); }) == 409);
  CHECK(svc.digests().size() == 1);
}

TEST_CASE("opting out pays the outside option") {
  SessionService svc(config_for(kPlain));
  const std::string id = svc.create(HumanRole::Consumer, "plain", Institution::NoInstitution)["session"];
  svc.offers(id);
  svc.choose(id, json{{"choice", "optout"}});
  json out = svc.outcome(id);
  CHECK(out["choice"] == "optout");
  CHECK(out["payoff"] == 1.6);
  CHECK(out["payoff_cents"] == 160);
  CHECK_FALSE(out.contains("treatment"));
}

TEST_CASE("unknown sessions and bad creation requests") {
  SessionService svc(config_for(kPlain));
  CHECK(status_of([&] { svc.state("s999999"); }) == 404);
  CHECK(status_of([&] { svc.create(json{{"role", "referee"}}); }) == 400);
  CHECK(status_of([&] { svc.create(json{{"role", "consumer"}, {"condition", "nope"}}); }) == 400);
  CHECK(status_of([&] { svc.create(json::array()); }) == 400);
  CHECK(svc.create(json{{"role", "expert"}})["phase"] == "AwaitingExpertSetup");
  CHECK(svc.cells()["cells"].size() == 3);
}

TEST_CASE("expert own play") {
  SessionService svc(config_for(kPlain));
  const std::string id = svc.create(HumanRole::Expert, "plain", Institution::Liability)["session"];
  CHECK(status_of([&] { svc.offers(id); }) == 409);
  CHECK(status_of([&] { svc.choose(id, std::optional<std::size_t>()); }) == 409);

  json bad_prices = {{"delegate", false}, {"p_low", 9}, {"p_high", 4},
                     {"small", {{"treatment", "LCT"}, {"charge", "low"}}},
                     {"big", {{"treatment", "HCT"}, {"charge", "high"}}}};
  CHECK(status_of([&] { svc.submit(id, ExpertSubmission::from_json(bad_prices)); }) == 422);

  json illegal = {{"delegate", false}, {"p_low", 4}, {"p_high", 8},
                  {"small", {{"treatment", "LCT"}, {"charge", "low"}}},
                  {"big", {{"treatment", "LCT"}, {"charge", "low"}}}};
  try {
    svc.submit(id, ExpertSubmission::from_json(illegal));
    FAIL("illegal action accepted");
  } catch (const SessionError& e) {
    CHECK(e.status() == 422);
    CHECK(e.code() == "illegal_action");
    CHECK(e.to_json()["phase"] == "AwaitingExpertSetup");
  }
  CHECK(svc.state(id)["phase"] == "AwaitingExpertSetup");

  json ok = illegal;
  ok["big"] = {{"treatment", "HCT"}, {"charge", "high"}};
  json done = svc.submit(id, ExpertSubmission::from_json(ok));
  CHECK(done["phase"] == "Resolved");
  json out = svc.outcome(id);
  CHECK(out["p_low"] == 4);
  CHECK(out["p_high"] == 8);
  CHECK(out["delegated"] == false);
  CHECK(status_of([&] { svc.submit(id, ExpertSubmission::from_json(ok)); }) == 409);
  CHECK_THROWS_AS(ExpertSubmission::from_json(json{{"delegate", 1}}), SessionError);
  CHECK_THROWS_AS(ExpertSubmission::from_json(json{{"delegate", false}, {"colour", "red"}}),
                  SessionError);
}

TEST_CASE("chosen objectives") {
  SessionService svc(config_for(delegating_market("ChosenObjective", true)));
  const std::string id =
      svc.create(HumanRole::Expert, "all-delegate", Institution::NoInstitution)["session"];
  json choices = svc.objective_choices(id);
  REQUIRE(choices["choices"].size() == 4);
  CHECK(choices["choices"][0]["objective"] == "NoObjective");
  CHECK(status_of([&] { svc.submit(id, ExpertSubmission::from_json({{"delegate", true}})); }) == 400);
  json done = svc.submit(
      id, ExpertSubmission::from_json({{"delegate", true}, {"objective", "InequityAverse"}}));
  CHECK(done["phase"] == "Resolved");
  json out = svc.outcome(id);
  CHECK(out["delegated"] == true);
  CHECK(out["objective"] == "InequityAverse");
}

TEST_CASE("fixed objective regime") {
  SessionService svc(config_for(delegating_market("FixedSelfInterested", true)));
  const std::string id =
      svc.create(HumanRole::Expert, "all-delegate", Institution::Verifiability)["session"];
  json choices = svc.objective_choices(id);
  REQUIRE(choices["choices"].size() == 1);
  CHECK(choices["choices"][0]["prompt"] == "maximize Player A's payoff");
  try {
    svc.submit(id, ExpertSubmission::from_json({{"delegate", true}, {"objective", "EfficiencyLoving"}}));
    FAIL("objective accepted");
  } catch (const SessionError& e) {
    CHECK(e.status() == 422);
    CHECK(e.code() == "objective_fixed");
  }
  CHECK(svc.submit(id, ExpertSubmission::from_json({{"delegate", true}}))["phase"] == "Resolved");
}

TEST_CASE("transparent fixed-objective offers name the objective") {
  SessionService svc(config_for(delegating_market("FixedSelfInterested", true)));
  const std::string id =
      svc.create(HumanRole::Consumer, "all-delegate", Institution::NoInstitution)["session"];
  json offers = svc.offers(id)["offers"];
  REQUIRE(offers.size() == 4);
  for (const json& o : offers) {
    CHECK(o["delegated"] == true);
    CHECK(o["objective"] == "maximize Player A's payoff");
  }
}

TEST_CASE("without transparency no payload mentions objectives") {
  for (const char* regime : {"ChosenObjective", "FixedSelfInterested"}) {
    CAPTURE(regime);
    SessionService svc(config_for(delegating_market(regime, false)));
    for (Institution inst : kInstitutions) {
      const std::string id = svc.create(HumanRole::Consumer, "all-delegate", inst)["session"];
      std::string seen = svc.state(id).dump();
      json offers = svc.offers(id);
      seen += offers.dump();
      for (const json& o : offers["offers"]) CHECK_FALSE(o.contains("objective"));
      seen += svc.choose(id, json{{"choice", "A1"}}).dump();
      seen += svc.outcome(id).dump();
      CHECK_FALSE(mentions_objective(seen));
    }
  }
}

TEST_CASE("listeners hear every phase change in order") {
  SessionService svc(config_for(kPlain));
  std::vector<json> events;
  std::mutex mu;
  svc.subscribe([&](const json& e) {
    std::lock_guard lock(mu);
    events.push_back(e);
  });
  const std::string id = svc.create(HumanRole::Consumer, "plain", Institution::Liability)["session"];
  svc.offers(id);
  svc.offers(id);  // repeat fetches do not re-announce
  svc.choose(id, json{{"choice", "A1"}});
  REQUIRE(events.size() == 3);
  CHECK(events[0]["phase"] == "OffersPosted");
  CHECK(events[1]["phase"] == "AwaitingConsumerChoice");
  CHECK(events[2]["phase"] == "Resolved");
  for (const json& e : events) CHECK(e["session"] == id);
}

TEST_CASE("random request orders never skip or reverse a phase") {
  // Model check: fire random requests at a pool of sessions and compare every
  // answer with a tiny reference model of the phase machine.
  SessionService svc(config_for(delegating_market("ChosenObjective", true), 3));
  std::mt19937_64 rng(2026);
  struct Model {
    std::string id;
    HumanRole role;
    int phase;
  };
  std::vector<Model> pool;
  int accepted = 0, refused = 0;
  for (int step = 0; step < 3000; ++step) {
    int op = static_cast<int>(rng() % 6);
    if (pool.empty() || op == 0) {
      HumanRole role = rng() % 2 ? HumanRole::Consumer : HumanRole::Expert;
      Institution inst = kInstitutions[rng() % 3];
      json s = svc.create(role, "all-delegate", inst);
      pool.push_back({s["session"], role, role == HumanRole::Consumer ? 1 : 0});
      CHECK(rank(s["phase"]) == pool.back().phase);
      continue;
    }
    Model& m = pool[rng() % pool.size()];
    int before = m.phase;
    int expect_status = 200;
    int expect_phase = before;
    int got_status = 200;
    try {
      switch (op) {
        case 1:
          expect_status = before == 0 ? 409 : 200;
          if (m.role == HumanRole::Consumer && before == 1) expect_phase = 2;
          svc.offers(m.id);
          break;
        case 2:
          expect_status = (m.role == HumanRole::Consumer && before == 2) ? 200 : 409;
          if (expect_status == 200) expect_phase = 3;
          svc.choose(m.id, std::optional<std::size_t>(rng() % 5 == 0 ? std::nullopt
                                                                     : std::optional<std::size_t>(rng() % 4)));
          break;
        case 3:
          expect_status = (m.role == HumanRole::Expert && before == 0) ? 200 : 409;
          if (expect_status == 200) expect_phase = 3;
          svc.submit(m.id, ExpertSubmission::from_json({{"delegate", true}, {"objective", "SelfInterested"}}));
          break;
        case 4:
          expect_status = before == 3 ? 200 : 409;
          svc.outcome(m.id);
          break;
        default:
          svc.state(m.id);
          break;
      }
    } catch (const SessionError& e) {
      got_status = e.status();
    }
    CHECK(got_status == expect_status);
    (got_status == 200 ? accepted : refused)++;
    json st = svc.state(m.id);
    m.phase = expect_phase;
    CHECK(rank(st["phase"]) == expect_phase);
    // History is the contiguous prefix of the phase order.
    const json& h = st["history"];
    for (std::size_t i = 0; i < h.size(); ++i) {
      int r = rank(h[i]);
      CHECK(r == static_cast<int>(i));
    }
  }
  CHECK(accepted > 500);
  CHECK(refused > 500);
  CHECK(svc.size() == pool.size());
}

TEST_CASE("concurrent sessions") {
  SessionService svc(config_for(kPlain));
  std::atomic<int> resolved{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      for (int k = 0; k < 25; ++k) {
        const std::string id =
            svc.create(HumanRole::Consumer, "plain", kInstitutions[(t + k) % 3])["session"];
        svc.offers(id);
        svc.choose(id, json{{"choice", "A" + std::to_string(k % 4 + 1)}});
        ++resolved;
      }
    });
  for (auto& th : threads) th.join();
  CHECK(resolved == 200);
  CHECK(svc.size() == 200);
  CHECK(svc.digests().size() == 200);
}

TEST_CASE("sessions are reproducible from the service seed") {
  auto play = [] {
    SessionService svc(config_for(kPlain, 99));
    std::vector<std::string> out;
    for (int k = 0; k < 5; ++k) {
      const std::string id = svc.create(HumanRole::Consumer, "plain", Institution::Liability)["session"];
      out.push_back(svc.offers(id).dump());
      svc.choose(id, json{{"choice", "A3"}});
      out.push_back(svc.outcome(id).dump());
    }
    return out;
  };
  CHECK(play() == play());
}

TEST_CASE("llm seats without a client are unavailable") {
  ServiceConfig c;
  c.scenario = parse_scenario(
      "experts: [{policy: llm, objective: SelfInterested, count: 4}]\n"
      "consumers: [{policy: threshold, count: 4}]\n");
  SessionService svc(c);
  CHECK(status_of([&] { svc.create(json{{"role", "consumer"}}); }) == 503);
}

}  // TEST_SUITE
