#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "core/service.hpp"

namespace httplib {
class Server;
}

namespace picap {

struct HttpOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  bool allow_external = false;
  std::filesystem::path static_dir;  // served at / when set
};

bool is_loopback_host(const std::string& host);

/// JSON-over-HTTP front end for AuthService.
///
///   POST /api/register      {"user_id","password"}
///   POST /api/login/init    {"user_id","secret","mode"}
///   POST /api/login/verify  {"challenge_id","clicks":[{"x","y"}]}
///   GET  /api/health
class HttpServer {
 public:
  /// Throws invalid_config for a non-loopback host without allow_external.
  HttpServer(AuthService& service, HttpOptions options);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket; returns the bound port. Throws io on failure.
  int bind();
  /// Serves until stop(). Calls bind() first if needed.
  void run();
  void stop();
  void wait_until_ready() const;
  int port() const noexcept { return port_; }

 private:
  void install_routes();

  AuthService& service_;
  HttpOptions options_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = -1;
};

}  // namespace picap
