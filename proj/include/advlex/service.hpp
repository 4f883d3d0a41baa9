#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "advlex/error.hpp"
#include "advlex/review.hpp"
#include "advlex/util.hpp"

namespace advlex::service {

using ojson = nlohmann::ordered_json;

struct Request {
  std::string method;
  std::string path;  // already percent-decoded
  std::map<std::string, std::string> query;
  std::string body;
  std::map<std::string, std::string> headers;  // lower-case names
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

inline int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownTask: return 404;
    case ErrorCode::TaskAlreadyDone:
    case ErrorCode::Conflict: return 409;
    case ErrorCode::InvalidResultType: return 422;
    case ErrorCode::BadRequest: return 400;
    default: return 500;
  }
}

inline Response json_response(int status, const ojson& j) { return {status, j.dump(), "application/json"}; }

inline Response error_response(int status, std::string_view code, const std::string& message) {
  return json_response(status, {{"code", code}, {"message", message}});
}

/// Maps requests onto a review session. Pure apart from the session, so it
/// is testable without sockets.
class Router {
 public:
  explicit Router(review::Session& session) : session_(session) {}

  Response handle(const Request& req) const {
    try {
      return route(req);
    } catch (const Error& e) {
      return error_response(http_status(e.code()), to_string(e.code()), e.what());
    } catch (const std::exception& e) {
      return error_response(500, "Internal", e.what());
    }
  }

 private:
  static constexpr std::size_t kDefaultLimit = 50;
  static constexpr std::size_t kMaxLimit = 1000;

  Response route(const Request& req) const {
    const auto& p = req.path;
    const bool get = req.method == "GET";
    if (p == "/health") return get ? health() : not_allowed();
    if (p == "/tasks") return get ? list_tasks(req) : not_allowed();
    if (p.rfind("/tasks/", 0) == 0) return get ? one_task(p.substr(7)) : not_allowed();
    if (p == "/decisions") return req.method == "POST" ? submit(req) : not_allowed();
    if (p == "/senses") return get ? senses() : not_allowed();
    if (p == "/synsets") return get ? synsets() : not_allowed();
    if (p == "/export") return get ? json_response(200, session_.export_state()) : not_allowed();
    return error_response(404, "NotFound", "no route for " + req.method + " " + p);
  }

  static Response not_allowed() { return error_response(405, "MethodNotAllowed", "method not allowed"); }

  Response health() const {
    auto n = session_.read([](const review::ReviewState& s) { return s.decision_count(); });
    return json_response(200, {{"status", "ok"}, {"decisions", n}});
  }

  static ojson with_payload(const review::ReviewTask& t, const review::ReviewState& s) {
    auto j = review::to_json(t);
    ojson payload = ojson::array();
    for (const auto& id : t.sense_ids) payload.push_back(advlex::to_json(s.entries().at(id)));
    j["payload"] = payload;
    return j;
  }

  Response list_tasks(const Request& req) const {
    review::TaskFilter f;
    if (auto it = req.query.find("kind"); it != req.query.end()) {
      f.kind = review::parse_task_kind(it->second);
      if (!f.kind) throw Error(ErrorCode::BadRequest, "kind", "unknown task kind '" + it->second + "'");
    }
    if (auto it = req.query.find("state"); it != req.query.end()) {
      f.state = review::parse_task_state(it->second);
      if (!f.state) throw Error(ErrorCode::BadRequest, "state", "unknown task state '" + it->second + "'");
    }
    if (auto it = req.query.find("lemma"); it != req.query.end()) f.lemma = it->second;
    std::optional<std::string> after;
    if (auto it = req.query.find("after"); it != req.query.end() && !it->second.empty()) after = it->second;
    std::size_t limit = kDefaultLimit;
    if (auto it = req.query.find("limit"); it != req.query.end()) {
      try {
        std::size_t used = 0;
        auto v = std::stoul(it->second, &used);
        if (used != it->second.size() || v == 0) throw std::invalid_argument("limit");
        limit = std::min<std::size_t>(v, kMaxLimit);
      } catch (const std::exception&) {
        throw Error(ErrorCode::BadRequest, "limit", "must be a positive integer");
      }
    }
    return session_.read([&](const review::ReviewState& s) {
      auto page = s.list(f, after, limit);
      ojson tasks = ojson::array();
      for (const auto& t : page.tasks) tasks.push_back(with_payload(t, s));
      ojson body;
      body["tasks"] = tasks;
      body["next"] = page.next ? ojson(*page.next) : ojson(nullptr);
      return json_response(200, body);
    });
  }

  Response one_task(const std::string& id) const {
    return session_.read(
        [&](const review::ReviewState& s) { return json_response(200, with_payload(s.task(id), s)); });
  }

  Response submit(const Request& req) const {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::BadRequest, "body", e.what());
    }
    auto d = review::decision_from_json(body);
    if (auto it = req.headers.find("x-actor"); it != req.headers.end() && !it->second.empty()) {
      if (!d.actor.empty() && d.actor != it->second) {
        throw Error(ErrorCode::BadRequest, "actor", "body actor differs from the X-Actor header");
      }
      d.actor = it->second;
    }
    if (d.actor.empty()) throw Error(ErrorCode::BadRequest, "actor", "send an X-Actor header");
    auto r = session_.submit(d);
    ojson out;
    out["task"] = review::to_json(r.task);
    out["sense"] = advlex::to_json(r.sense);
    out["duplicate"] = r.duplicate;
    return json_response(r.duplicate ? 200 : 201, out);
  }

  Response senses() const {
    return session_.read([](const review::ReviewState& s) {
      ojson body;
      body["senses"] = s.snapshot()["senses"];
      return json_response(200, body);
    });
  }

  Response synsets() const {
    const auto path = session_.run_dir() / "synsets.json";
    ojson body;
    body["synsets"] = ojson::array();
    if (fs::exists(path)) {
      auto state = nlohmann::ordered_json::parse(read_file(path));
      if (state.contains("synsets")) body["synsets"] = state["synsets"];
    }
    return json_response(200, body);
  }

  review::Session& session_;
};

/// httplib binding. Serves a static UI bundle from `ui_dir` when given.
class Server {
 public:
  Server(review::Session& session, std::optional<fs::path> ui_dir = std::nullopt)
      : router_(session) {
    if (ui_dir && fs::is_directory(*ui_dir)) http_.set_mount_point("/", ui_dir->string());
    auto bridge = [this](const httplib::Request& in, httplib::Response& out) {
      Request req;
      req.method = in.method;
      req.path = in.path;
      for (const auto& [k, v] : in.params) req.query.emplace(k, v);
      req.body = in.body;
      for (const auto& [k, v] : in.headers) req.headers.emplace(to_lower_ascii(k), v);
      auto res = router_.handle(req);
      out.status = res.status;
      out.set_content(res.body, res.content_type);
    };
    http_.Get(R"(/.*)", bridge);
    http_.Post(R"(/.*)", bridge);
  }

  ~Server() { stop(); }

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port) {
    if (port == 0) return http_.bind_to_any_port(host);
    if (!http_.bind_to_port(host, port)) {
      throw Error(ErrorCode::ConfigError, host + ":" + std::to_string(port), "cannot bind");
    }
    return port;
  }

  /// Blocks until stop() is called.
  void run() { http_.listen_after_bind(); }

  void start_background() {
    thread_ = std::thread([this] { run(); });
    http_.wait_until_ready();
  }

  void stop() {
    if (http_.is_running()) http_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  Router router_;
  httplib::Server http_;
  std::thread thread_;
};

}  // namespace advlex::service
