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

// HTTP + JSON front end for SessionService, with WebSocket phase pushes.
//
//   GET  /api/cells
//   POST /api/sessions                     {"role", "condition"?, "institution"?}
//   GET  /api/sessions/{id}
//   GET  /api/sessions/{id}/offers
//   GET  /api/sessions/{id}/objectives
//   POST /api/sessions/{id}/choice         {"choice": "A1".."A4" | "optout"}
//   POST /api/sessions/{id}/setup          see ExpertSubmission::from_json
//   GET  /api/sessions/{id}/outcome
//
// WebSocket clients connect to ws://host:ws_port/?session={id} (or "/" for
// every session) and receive {"event": "phase", "session", "phase"} frames;
// a {"event": "state", ...} snapshot is sent on connect when a session is
// named.

#ifndef CREDENCE_SERVER_HPP_
#define CREDENCE_SERVER_HPP_

#include <filesystem>
#include <memory>
#include <string>

#include "credence/session.hpp"

namespace credence {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int http_port = 8080;  // 0 picks a free port
  int ws_port = 8081;    // 0 picks a free port
  std::filesystem::path static_dir;  // served at / when set (the browser client)
};

class SessionServer {
 public:
  SessionServer(SessionService& service, ServerOptions options);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  // Binds both ports and serves on background threads.
  void start();
  void stop();
  // Blocks until stop() is called from elsewhere.
  void wait();

  int http_port() const;
  int ws_port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace credence

#endif  // CREDENCE_SERVER_HPP_
