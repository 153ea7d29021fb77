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

#define CPPHTTPLIB_OPENSSL_SUPPORT

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "credence/server.hpp"
#include "doctest.h"
#include "httplib.h"

using namespace credence;
using nlohmann::json;
namespace beast = boost::beast;
namespace net = boost::asio;

namespace {

const char* kScenario =
    "institutions: [NoInstitution, Verifiability, Liability]\n"
    "transparency: true\n"
    "objective_regime: ChosenObjective\n"
    "experts:\n"
    "  - {policy: delegation, human: {policy: mixture}, rate: 0.5, count: 4}\n"
    "consumers: [{policy: transparency-aware, count: 4}]\n"
    "conditions: [{name: live}]\n";

struct Fixture {
  SessionService service;
  SessionServer server;
  httplib::Client client;

  Fixture()
      : service([] {
          ServiceConfig c;
          c.scenario = parse_scenario(kScenario, "live.yaml");
          c.seed = 5;
          return c;
        }()),
        server(service, ServerOptions{"127.0.0.1", 0, 0, {}}),
        client("127.0.0.1", start_and_port(server)) {}

  static int start_and_port(SessionServer& s) {
    s.start();
    return s.http_port();
  }

  std::pair<int, json> get(const std::string& path) {
    auto r = client.Get(path);
    REQUIRE(r);
    return {r->status, json::parse(r->body)};
  }
  std::pair<int, json> post(const std::string& path, const json& body) {
    auto r = client.Post(path, body.dump(), "application/json");
    REQUIRE(r);
    return {r->status, json::parse(r->body)};
  }
};

class WsClient {
 public:
  WsClient(int port, const std::string& target) : ws_(ioc_) {
    net::ip::tcp::resolver resolver(ioc_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", target);
  }
  json next() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }
  ~WsClient() {
    beast::error_code ec;
    ws_.close(beast::websocket::close_code::normal, ec);
  }

 private:
  net::io_context ioc_;
  beast::websocket::stream<net::ip::tcp::socket> ws_;
};

}  // namespace

TEST_CASE("consumer flow over HTTP") {
  Fixture f;
  auto [st, cells] = f.get("/api/cells");
  CHECK(st == 200);
  CHECK(cells["cells"].size() == 3);

  auto [cs, created] = f.post("/api/sessions", {{"role", "consumer"}, {"institution", "Liability"}});
  CHECK(cs == 200);
  const std::string id = created["session"];
  CHECK(created["phase"] == "OffersPosted");

  CHECK(f.get("/api/sessions/" + id + "/outcome").first == 409);
  auto [os, offers] = f.get("/api/sessions/" + id + "/offers");
  CHECK(os == 200);
  CHECK(offers["offers"].size() == 4);
  auto [bad, err] = f.post("/api/sessions/" + id + "/choice", {{"choice", "A7"}});
  CHECK(bad == 422);
  CHECK(err["error"] == "no_such_expert");
  CHECK(f.post("/api/sessions/" + id + "/choice", {{"choice", "optout"}}).first == 200);
  auto [rs, outcome] = f.get("/api/sessions/" + id + "/outcome");
  CHECK(rs == 200);
  CHECK(outcome["payoff"] == 1.6);
}

TEST_CASE("expert flow over HTTP") {
  Fixture f;
  const std::string id = f.post("/api/sessions", {{"role", "expert"}, {"institution", "Liability"}}).second["session"];
  auto [s, choices] = f.get("/api/sessions/" + id + "/objectives");
  CHECK(s == 200);
  CHECK(choices["choices"].size() == 4);
  json illegal = {{"delegate", false}, {"p_low", 3}, {"p_high", 7},
                  {"small", {{"treatment", "LCT"}, {"charge", "low"}}},
                  {"big", {{"treatment", "LCT"}, {"charge", "low"}}}};
  auto [is, ie] = f.post("/api/sessions/" + id + "/setup", illegal);
  CHECK(is == 422);
  CHECK(ie["error"] == "illegal_action");
  CHECK(ie["phase"] == "AwaitingExpertSetup");
  auto [ds, done] = f.post("/api/sessions/" + id + "/setup",
                           {{"delegate", true}, {"objective", "EfficiencyLoving"}});
  CHECK(ds == 200);
  CHECK(done["phase"] == "Resolved");
  CHECK(f.get("/api/sessions/" + id + "/outcome").second["visits"].is_array());
}

TEST_CASE("malformed requests") {
  Fixture f;
  auto r = f.client.Post("/api/sessions", "{not json", "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);
  CHECK(f.get("/api/sessions/s424242").first == 404);
  CHECK(f.post("/api/sessions", {{"role", "consumer"}, {"institution", "Mars"}}).first == 400);
  CHECK(f.post("/api/sessions", {{"role", "consumer"}, {"condition", "absent"}}).first == 400);
}

TEST_CASE("WebSocket pushes every phase change") {
  Fixture f;
  auto ws_info = f.get("/api/ws").second;
  CHECK(ws_info["port"] == f.server.ws_port());
  const std::string id = f.post("/api/sessions", {{"role", "consumer"}}).second["session"];

  WsClient one(f.server.ws_port(), "/?session=" + id);
  json hello = one.next();
  CHECK(hello["event"] == "state");
  CHECK(hello["phase"] == "OffersPosted");

  WsClient all(f.server.ws_port(), "/");
  // A second session's events reach only the unfiltered client.
  const std::string other = f.post("/api/sessions", {{"role", "consumer"}}).second["session"];
  json e0 = all.next();
  CHECK(e0["session"] == other);
  CHECK(e0["phase"] == "OffersPosted");

  f.get("/api/sessions/" + id + "/offers");
  json e1 = one.next();
  CHECK(e1["event"] == "phase");
  CHECK(e1["phase"] == "AwaitingConsumerChoice");
  f.post("/api/sessions/" + id + "/choice", {{"choice", "A1"}});
  CHECK(one.next()["phase"] == "Resolved");

  CHECK(all.next()["phase"] == "AwaitingConsumerChoice");
  json last = all.next();
  CHECK(last["session"] == id);
  CHECK(last["phase"] == "Resolved");

  WsClient stranger(f.server.ws_port(), "/?session=s999999");
  json err = stranger.next();
  CHECK(err["event"] == "error");
  CHECK(err["error"] == "unknown_session");
}
