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

// Same httplib configuration as the LLM client; see llm_client.cpp.
#define CPPHTTPLIB_OPENSSL_SUPPORT

#include "credence/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include "httplib.h"

namespace credence {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

class WsHub;

// One WebSocket client. All members are touched only on the hub's single
// io thread, which serializes them without a strand.
class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket socket, WsHub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void start();
  void send(std::string text);
  const std::string& filter() const { return filter_; }
  void close();

 private:
  void on_request(beast::error_code ec);
  void on_accept(beast::error_code ec);
  void read_loop();
  void write_next();

  websocket::stream<beast::tcp_stream> ws_;
  WsHub& hub_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::string filter_;
  std::deque<std::string> queue_;
  bool open_ = false;
};

class WsHub {
 public:
  WsHub(SessionService& service, const std::string& host, int port)
      : service_(service), acceptor_(ioc_) {
    tcp::endpoint ep(net::ip::make_address(host), static_cast<unsigned short>(port));
    acceptor_.open(ep.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen();
  }

  int port() const { return acceptor_.local_endpoint().port(); }
  SessionService& service() { return service_; }

  void run() {
    accept();
    thread_ = std::thread([this] { ioc_.run(); });
  }

  void stop() {
    net::post(ioc_, [this] {
      beast::error_code ec;
      acceptor_.close(ec);
      for (auto& w : conns_)
        if (auto c = w.lock()) c->close();
    });
    // Give closes a moment to flush, then stop regardless.
    net::post(ioc_, [this] { ioc_.stop(); });
    if (thread_.joinable()) thread_.join();
  }

  // Called from any thread.
  void broadcast(const json& event) {
    std::string text = event.dump();
    std::string session = event.value("session", "");
    net::post(ioc_, [this, text = std::move(text), session] {
      std::erase_if(conns_, [](const auto& w) { return w.expired(); });
      for (auto& w : conns_)
        if (auto c = w.lock(); c && (c->filter().empty() || c->filter() == session)) c->send(text);
    });
  }

  void add(const std::shared_ptr<WsConnection>& c) { conns_.push_back(c); }

 private:
  void accept() {
    acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // closed
      std::make_shared<WsConnection>(std::move(socket), *this)->start();
      accept();
    });
  }

  SessionService& service_;
  net::io_context ioc_;
  tcp::acceptor acceptor_;
  std::vector<std::weak_ptr<WsConnection>> conns_;
  std::thread thread_;
};

void WsConnection::start() {
  auto self = shared_from_this();
  http::async_read(ws_.next_layer(), buffer_, request_,
                   [self](beast::error_code ec, std::size_t) { self->on_request(ec); });
}

void WsConnection::on_request(beast::error_code ec) {
  if (ec || !websocket::is_upgrade(request_)) return;
  std::string target(request_.target());
  if (auto q = target.find("session="); q != std::string::npos) {
    filter_ = target.substr(q + 8);
    filter_ = filter_.substr(0, filter_.find('&'));
  }
  auto self = shared_from_this();
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.async_accept(request_, [self](beast::error_code ec) { self->on_accept(ec); });
}

void WsConnection::on_accept(beast::error_code ec) {
  if (ec) return;
  open_ = true;
  hub_.add(shared_from_this());
  if (!filter_.empty()) {
    json hello;
    try {
      hello = hub_.service().state(filter_);
      hello["event"] = "state";
    } catch (const SessionError& e) {
      hello = e.to_json();
      hello["event"] = "error";
    }
    send(hello.dump());
  }
  read_loop();
}

void WsConnection::read_loop() {
  auto self = shared_from_this();
  buffer_.clear();
  ws_.async_read(buffer_, [self](beast::error_code ec, std::size_t) {
    if (ec) {
      self->open_ = false;
      return;
    }
    // Clients only listen; anything they send is ignored.
    self->read_loop();
  });
}

void WsConnection::send(std::string text) {
  if (!open_) return;
  queue_.push_back(std::move(text));
  if (queue_.size() == 1) write_next();
}

void WsConnection::write_next() {
  auto self = shared_from_this();
  ws_.text(true);
  ws_.async_write(net::buffer(queue_.front()), [self](beast::error_code ec, std::size_t) {
    if (ec) {
      self->open_ = false;
      self->queue_.clear();
      return;
    }
    self->queue_.pop_front();
    if (!self->queue_.empty()) self->write_next();
  });
}

void WsConnection::close() {
  if (!open_) return;
  open_ = false;
  auto self = shared_from_this();
  ws_.async_close(websocket::close_code::going_away, [self](beast::error_code) {});
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw SessionError(400, "bad_json", std::string("request body is not JSON: ") + e.what());
  }
}

}  // namespace

struct SessionServer::Impl {
  SessionService& service;
  ServerOptions options;
  httplib::Server http;
  std::shared_ptr<WsHub> hub;
  std::thread http_thread;
  int http_port = -1;
  int ws_port = -1;
  std::mutex mu;
  std::condition_variable stopped_cv;
  bool running = false;

  Impl(SessionService& s, ServerOptions o) : service(s), options(std::move(o)) {}

  // Runs a handler, mapping SessionError to its status.
  template <typename F>
  httplib::Server::Handler wrap(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        reply(res, 200, f(req));
      } catch (const SessionError& e) {
        reply(res, e.status(), e.to_json());
      } catch (const std::exception& e) {
        reply(res, 500, json{{"error", "internal"}, {"message", e.what()}});
      }
    };
  }

  void routes() {
    SessionService& s = service;
    auto id = [](const httplib::Request& r) { return r.path_params.at("id"); };
    http.Get("/api/cells", wrap([&s](const httplib::Request&) { return s.cells(); }));
    http.Post("/api/sessions", wrap([&s](const httplib::Request& r) { return s.create(body_of(r)); }));
    http.Get("/api/sessions/:id", wrap([&s, id](const httplib::Request& r) { return s.state(id(r)); }));
    http.Get("/api/sessions/:id/offers",
             wrap([&s, id](const httplib::Request& r) { return s.offers(id(r)); }));
    http.Get("/api/sessions/:id/objectives",
             wrap([&s, id](const httplib::Request& r) { return s.objective_choices(id(r)); }));
    http.Post("/api/sessions/:id/choice",
              wrap([&s, id](const httplib::Request& r) { return s.choose(id(r), body_of(r)); }));
    http.Post("/api/sessions/:id/setup", wrap([&s, id](const httplib::Request& r) {
                return s.submit(id(r), ExpertSubmission::from_json(body_of(r)));
              }));
    http.Get("/api/sessions/:id/outcome",
             wrap([&s, id](const httplib::Request& r) { return s.outcome(id(r)); }));
    http.Get("/api/ws", wrap([this](const httplib::Request&) {
               return json{{"port", ws_port}, {"path", "/?session={id}"}};
             }));
    // The browser client may be served from another origin during development.
    http.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
    http.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    if (!options.static_dir.empty()) http.set_mount_point("/", options.static_dir.string());
  }
};

SessionServer::SessionServer(SessionService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  impl_->routes();
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::start() {
  Impl& m = *impl_;
  m.hub = std::make_shared<WsHub>(m.service, m.options.host, m.options.ws_port);
  std::weak_ptr<WsHub> weak = m.hub;
  m.service.subscribe([weak](const json& event) {
    if (auto hub = weak.lock()) hub->broadcast(event);
  });
  if (m.options.http_port == 0) {
    m.http_port = m.http.bind_to_any_port(m.options.host);
  } else if (m.http.bind_to_port(m.options.host, m.options.http_port)) {
    m.http_port = m.options.http_port;
  }
  if (m.http_port <= 0)
    throw std::runtime_error("cannot bind HTTP port " + std::to_string(m.options.http_port));
  m.ws_port = m.hub->port();
  m.hub->run();
  m.http_thread = std::thread([&m] { m.http.listen_after_bind(); });
  m.http.wait_until_ready();
  std::lock_guard lock(m.mu);
  m.running = true;
}

void SessionServer::stop() {
  Impl& m = *impl_;
  {
    std::lock_guard lock(m.mu);
    if (!m.running) return;
    m.running = false;
  }
  m.http.stop();
  if (m.http_thread.joinable()) m.http_thread.join();
  // The service keeps the listener; it goes quiet once the hub is gone.
  m.hub->stop();
  m.hub.reset();
  m.stopped_cv.notify_all();
}

void SessionServer::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->stopped_cv.wait(lock, [this] { return !impl_->running; });
}

int SessionServer::http_port() const { return impl_->http_port; }
int SessionServer::ws_port() const { return impl_->ws_port; }

}  // namespace credence
