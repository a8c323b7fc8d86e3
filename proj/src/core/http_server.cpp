#include "core/http_server.hpp"

#include <chrono>

#include <httplib.h>
#include <json.hpp>

#include "core/crypto.hpp"
#include "core/error.hpp"

namespace picap {

namespace {

using nlohmann::json;

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void reply_error(httplib::Response& res, int status, std::string_view code) {
  reply(res, status, json{{"ok", false}, {"error", code}});
}

int status_for(Errc code) {
  switch (code) {
    case Errc::duplicate_user: return 409;
    case Errc::rate_limited: return 429;
    case Errc::unknown_challenge: return 404;
    case Errc::expired:
    case Errc::already_consumed: return 410;
    case Errc::storage:
    case Errc::io: return 500;
    default: return 400;
  }
}

json ticket_json(const ChallengeTicket& t) {
  const auto ttl = std::chrono::duration_cast<std::chrono::seconds>(t.expires_at - t.issued_at);
  return json{{"challenge_id", t.challenge_id},
              {"image", base64_encode(t.image)},
              {"mode", to_string(t.mode)},
              {"expires_in_s", ttl.count()}};
}

// Parses the body and runs `fn`, mapping failures to HTTP statuses.
template <class Fn>
void handle(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
  json body;
  try {
    body = json::parse(req.body);
  } catch (const json::exception&) {
    reply_error(res, 400, "invalid_json");
    return;
  }
  if (!body.is_object()) {
    reply_error(res, 400, "invalid_json");
    return;
  }
  try {
    fn(body);
  } catch (const Error& e) {
    reply_error(res, status_for(e.code()), errc_name(e.code()));
  } catch (const json::exception&) {
    reply_error(res, 400, "invalid_request");
  }
}

}  // namespace

bool is_loopback_host(const std::string& host) {
  return host == "127.0.0.1" || host == "localhost" || host == "::1" || host.rfind("127.", 0) == 0;
}

HttpServer::HttpServer(AuthService& service, HttpOptions options)
    : service_(service), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  if (!options_.allow_external && !is_loopback_host(options_.host)) {
    throw Error(Errc::invalid_config,
                "refusing to listen on non-loopback host " + options_.host +
                    " without --allow-external (terminate TLS in front of the service)");
  }
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  server_->Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, json{{"ok", true}});
  });

  server_->Post("/api/register", [this](const httplib::Request& req, httplib::Response& res) {
    handle(req, res, [&](const json& body) {
      std::string password = body.at("password").get<std::string>();
      try {
        service_.register_user(body.at("user_id").get<std::string>(), password);
      } catch (...) {
        secure_wipe(password);
        throw;
      }
      secure_wipe(password);
      reply(res, 201, json{{"ok", true}});
    });
  });

  server_->Post("/api/login/init", [this](const httplib::Request& req, httplib::Response& res) {
    handle(req, res, [&](const json& body) {
      std::string secret = body.at("secret").get<std::string>();
      const Mode mode = parse_mode(body.value("mode", std::string("character")));
      ChallengeTicket ticket;
      try {
        ticket = service_.login_init(body.at("user_id").get<std::string>(), secret, mode, req.remote_addr);
      } catch (...) {
        secure_wipe(secret);
        throw;
      }
      secure_wipe(secret);
      reply(res, 200, ticket_json(ticket));
    });
  });

  server_->Post("/api/login/verify", [this](const httplib::Request& req, httplib::Response& res) {
    handle(req, res, [&](const json& body) {
      std::vector<Point> clicks;
      for (const auto& c : body.at("clicks")) {
        clicks.push_back({c.at("x").get<int>(), c.at("y").get<int>()});
      }
      const LoginResult result =
          service_.login_verify(body.at("challenge_id").get<std::string>(), clicks);
      json out{{"status", to_string(result.status)}};
      if (result.token) out["token"] = *result.token;
      if (result.next) {
        const json t = ticket_json(*result.next);
        for (const auto& [k, v] : t.items()) out[k] = v;
      }
      reply(res, 200, out);
    });
  });

  if (!options_.static_dir.empty()) server_->set_mount_point("/", options_.static_dir.string());
}

int HttpServer::bind() {
  if (port_ >= 0) return port_;
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
  } else if (server_->bind_to_port(options_.host, options_.port)) {
    port_ = options_.port;
  }
  if (port_ < 0) {
    throw Error(Errc::io, "cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
  return port_;
}

void HttpServer::run() {
  bind();
  server_->listen_after_bind();
}

void HttpServer::stop() {
  if (server_) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace picap
