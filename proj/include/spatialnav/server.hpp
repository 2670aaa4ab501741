#pragma once

// HTTP+JSON front of the session store.

#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "spatialnav/humanlab.hpp"

namespace spatialnav {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  ExclusionCriterion default_criterion = ExclusionCriterion::max_one_attention_error;
  std::optional<std::string> static_dir;
};

inline int http_status(SessionFailure f) {
  switch (f) {
    case SessionFailure::unknown_session:
    case SessionFailure::unknown_question: return 404;
    case SessionFailure::expired: return 410;
    case SessionFailure::duplicate:
    case SessionFailure::out_of_order: return 409;
    case SessionFailure::invalid: return 400;
  }
  return 500;
}

class HumanlabServer {
 public:
  HumanlabServer(SessionStore& store, ServerOptions opt) : store_(store), opt_(std::move(opt)) { routes(); }

  /// Binds the socket; throws network_error when the address is taken.
  int bind() {
    if (opt_.port == 0) {
      port_ = server_.bind_to_any_port(opt_.host);
    } else {
      port_ = server_.bind_to_port(opt_.host, opt_.port) ? opt_.port : -1;
    }
    if (port_ < 0) {
      throw Error(ErrorCode::network,
                  "cannot bind " + opt_.host + ":" + std::to_string(opt_.port) + " (address in use?)");
    }
    return port_;
  }

  /// Serves until stop(); bind() must have succeeded.
  void listen() { server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  int port() const noexcept { return port_; }

 private:
  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void fail(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    reply(res, status, {{"error", code}, {"message", message}});
  }

  template <class F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const SessionError& e) {
      const char* code = "session_error";
      switch (e.failure()) {
        case SessionFailure::unknown_session: code = "unknown_session"; break;
        case SessionFailure::unknown_question: code = "unknown_question"; break;
        case SessionFailure::expired: code = "expired"; break;
        case SessionFailure::duplicate: code = "duplicate"; break;
        case SessionFailure::out_of_order: code = "out_of_order"; break;
        case SessionFailure::invalid: code = "invalid"; break;
      }
      fail(res, http_status(e.failure()), code, e.what());
    } catch (const Error& e) {
      fail(res, e.code() == ErrorCode::usage ? 400 : 500, std::string(to_string(e.code())), e.what());
    }
  }

  void routes() {
    // SO_REUSEPORT (the library default) would let two servers share a port.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server_.Post("/sessions", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        const auto plan = store_.create();
        nlohmann::json qs = nlohmann::json::array();
        for (std::size_t i = 0; i < plan.questions.size(); ++i) {
          qs.push_back({{"index", i}, {"question_id", plan.questions[i].question_id}});
        }
        reply(res, 201,
              {{"session_id", plan.session_id},
               {"total", plan.questions.size()},
               {"time_budget_seconds", plan.budget_seconds},
               {"created_at", plan.created_at},
               {"questions", qs}});
      });
    });

    server_.Get(R"(/sessions/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto n = store_.next(req.matches[1]);
        nlohmann::json body = {{"done", n.done},
                               {"index", n.index},
                               {"total", n.total},
                               {"remaining_seconds", n.remaining_seconds}};
        if (!n.done) {
          body["question_id"] = n.question_id;
          body["prompt"] = n.prompt;
        }
        reply(res, 200, body);
      });
    });

    server_.Post(R"(/sessions/([^/]+)/answers)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        nlohmann::json body;
        try {
          body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::parse_error&) {
          return fail(res, 400, "bad_request", "body is not JSON");
        }
        if (!body.is_object() || !body.contains("question_id") || !body["question_id"].is_string() ||
            !body.contains("answer") || !body["answer"].is_string() || !body.contains("elapsed_seconds") ||
            !body["elapsed_seconds"].is_number()) {
          return fail(res, 400, "bad_request", "need question_id (string), answer (string), elapsed_seconds (number)");
        }
        const auto rec = store_.submit(req.matches[1], body["question_id"].get<std::string>(),
                                       body["answer"].get<std::string>(), body["elapsed_seconds"].get<double>());
        reply(res, 201, {{"record_id", rec.record_id}});
      });
    });

    server_.Get("/admin/results", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto criterion = opt_.default_criterion;
        if (req.has_param("criterion")) {
          const auto c = parse_criterion(req.get_param_value("criterion"));
          if (!c) return fail(res, 400, "bad_request", "unknown criterion " + req.get_param_value("criterion"));
          criterion = *c;
        }
        const auto sessions = store_.snapshot();
        HumanScore score;
        try {
          score = score_humans(sessions, criterion);
        } catch (const Error&) {
          return fail(res, 404, "no_results", "no complete sessions yet");
        }
        if (req.has_param("format") && req.get_param_value("format") == "json") {
          reply(res, 200, to_json(score));
        } else {
          res.status = 200;
          res.set_content(human_table_csv(score), "text/csv");
        }
      });
    });

    if (opt_.static_dir) {
      if (!server_.set_mount_point("/", *opt_.static_dir)) {
        throw io_error("static directory " + *opt_.static_dir + " does not exist");
      }
    }
  }

  SessionStore& store_;
  ServerOptions opt_;
  httplib::Server server_;
  int port_ = -1;
};

}  // namespace spatialnav
