#pragma once

// JSON API over a SessionState, bound to the loopback interface.

#include <httplib.h>

#include <cstdlib>

#include "qps/session.hpp"

namespace qps {

inline constexpr int kDefaultPort = 8765;
inline constexpr unsigned kMaxServerDepth = 12;
inline constexpr std::size_t kMaxServerTrials = 10000;

/// Port from QPS_PORT, or the default.
inline int server_port_from_env() {
  const char* v = std::getenv("QPS_PORT");
  if (!v || !*v) return kDefaultPort;
  char* end = nullptr;
  const long p = std::strtol(v, &end, 10);
  if (*end || p <= 0 || p > 65535) throw EngineError(std::string("QPS_PORT is not a valid port: ") + v);
  return static_cast<int>(p);
}

class SessionServer {
 public:
  explicit SessionServer(SessionState& session) : session_(session) { routes(); }

  /// Binds 127.0.0.1:port (0 picks a free port) and returns the port.
  int bind(int port) {
    if (port == 0) return server_.bind_to_any_port("127.0.0.1");
    if (!server_.bind_to_port("127.0.0.1", port)) throw EngineError("cannot bind 127.0.0.1:" + std::to_string(port));
    return port;
  }
  /// Blocks until stop().
  void run() { server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

 private:
  using json = nlohmann::json;

  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(2), "application/json");
  }

  /// Runs fn, turning engine errors into 400 and anything else into 500.
  template <class Fn>
  static void guarded(const std::string& command, httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const json::exception& e) {
      reply(res, 400, {{"command", command}, {"error", {{"kind", "request"}, {"message", e.what()}}}});
    } catch (const EngineError& e) {
      reply(res, 400, report::error(command, e));
    } catch (const std::exception& e) {
      reply(res, 500, {{"command", command}, {"error", {{"kind", "internal"}, {"message", e.what()}}}});
    }
  }

  static std::size_t vertex_arg(const json& v, std::size_t n) {
    if (!v.is_number_integer()) throw EngineError("vertex must be an integer");
    const long long k = v.get<long long>();
    if (k < 1 || static_cast<std::size_t>(k) > n) throw PreconditionError("vertex " + std::to_string(k) + " out of range 1.." + std::to_string(n));
    return static_cast<std::size_t>(k - 1);
  }

  void routes() {
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

    server_.Get("/state", [this](const httplib::Request&, httplib::Response& res) {
      guarded("state", res, [&] { reply(res, 200, session_.state_json()); });
    });

    server_.Post("/mutate", [this](const httplib::Request& req, httplib::Response& res) {
      std::unique_lock lock(session_.mutation_mutex(), std::try_to_lock);
      if (!lock.owns_lock()) {
        reply(res, 409, {{"command", "mutate"}, {"error", {{"kind", "busy"}, {"message", "a mutation is already running"}}}});
        return;
      }
      guarded("mutate", res, [&] {
        const json body = json::parse(req.body);
        const json& v = body.is_object() ? body.at("vertex") : body;
        const auto before = session_.current();
        const std::size_t k = vertex_arg(v, before.shape->vertex_count());
        const MutationResult m = session_.mutate(k);
        json out = report::mutation(before.potential, m);
        out["state"] = session_.state_json();
        reply(res, 200, out);
      });
    });

    server_.Post("/undo", [this](const httplib::Request&, httplib::Response& res) {
      std::unique_lock lock(session_.mutation_mutex(), std::try_to_lock);
      if (!lock.owns_lock()) {
        reply(res, 409, {{"command", "undo"}, {"error", {{"kind", "busy"}, {"message", "a mutation is already running"}}}});
        return;
      }
      guarded("undo", res, [&] {
        if (!session_.undo()) throw PreconditionError("nothing to undo");
        reply(res, 200, session_.state_json());
      });
    });

    server_.Get("/jacobian", [this](const httplib::Request& req, httplib::Response& res) {
      guarded("jacobian", res, [&] {
        unsigned depth = 6;
        if (req.has_param("depth")) {
          const std::string d = req.get_param_value("depth");
          if (d.empty() || d.find_first_not_of("0123456789") != std::string::npos || d.size() > 3) throw EngineError("depth must be a non-negative integer");
          depth = static_cast<unsigned>(std::stoul(d));
        }
        if (depth > kMaxServerDepth) throw EngineError("depth " + std::to_string(depth) + " exceeds the server limit " + std::to_string(kMaxServerDepth));
        reply(res, 200, report::jacobian(session_.current().potential, depth));
      });
    });

    server_.Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
      guarded("search-nondegenerate", res, [&] {
        const json body = json::parse(req.body);
        const auto cur = session_.current();
        std::vector<std::size_t> seq;
        for (const auto& v : body.at("sequence")) seq.push_back(vertex_arg(v, cur.shape->vertex_count()));
        const std::size_t trials = body.value("trials", std::size_t{1000});
        if (trials > kMaxServerTrials) throw EngineError("trials exceeds the server limit " + std::to_string(kMaxServerTrials));
        const std::uint64_t seed = body.value("seed", session_.initial().seed.value_or(0));
        reply(res, 200, report::search(seq, nondegenerate_search(cur.shape, seq, trials, seed)));
      });
    });
  }

  SessionState& session_;
  httplib::Server server_;
};

}  // namespace qps
