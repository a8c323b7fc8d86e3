#include <catch_amalgamated.hpp>

#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "core/crypto.hpp"
#include "core/error.hpp"
#include "core/http_server.hpp"
#include "support.hpp"

using namespace picap;
using nlohmann::json;

namespace {

std::vector<std::uint8_t> base64_decode(const std::string& in) {
  static const std::string table = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::vector<std::uint8_t> out;
  std::uint32_t buf = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=') break;
    const auto v = table.find(c);
    REQUIRE(v != std::string::npos);
    buf = buf << 6 | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>(buf >> bits & 0xff));
    }
  }
  return out;
}

struct LiveServer {
  testing::TempDir dir;
  std::unique_ptr<AuthService> service;
  std::unique_ptr<HttpServer> server;
  std::thread worker;
  int port = 0;

  explicit LiveServer(std::filesystem::path static_dir = {}) {
    ServiceOptions opts;
    service = std::make_unique<AuthService>(dir.path(), std::move(opts));
    HttpOptions http;
    http.port = 0;
    http.static_dir = std::move(static_dir);
    server = std::make_unique<HttpServer>(*service, http);
    port = server->bind();
    worker = std::thread([this] { server->run(); });
    server->wait_until_ready();
  }
  ~LiveServer() {
    server->stop();
    worker.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_connection_timeout(5);
    c.set_read_timeout(30);
    return c;
  }
};

httplib::Result post(httplib::Client& c, const char* path, const json& body) {
  return c.Post(path, body.dump(), "application/json");
}

json clicks_for(const AuthService& svc, const std::string& id, std::string_view secret) {
  const auto view = svc.visible_challenge(id);
  REQUIRE(view);
  json out = json::array();
  for (std::size_t i = 0; i < view->labels.size(); ++i) {
    if (secret.find(view->labels[i][0]) != std::string_view::npos) {
      out.push_back({{"x", view->centers[i].x}, {"y", view->centers[i].y}});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("non-loopback hosts need an explicit override") {
  testing::TempDir dir;
  AuthService svc(dir.path(), {});
  HttpOptions opts;
  opts.host = "0.0.0.0";
  CHECK_THROWS_AS(HttpServer(svc, opts), Error);
  opts.allow_external = true;
  CHECK_NOTHROW(HttpServer(svc, opts));
  CHECK(is_loopback_host("127.0.0.1"));
  CHECK(is_loopback_host("::1"));
  CHECK(!is_loopback_host("192.168.1.4"));
}

TEST_CASE("HTTP API round trip") {
  LiveServer live;
  auto c = live.client();

  auto health = c.Get("/api/health");
  REQUIRE(health);
  CHECK(health->status == 200);

  auto reg = post(c, "/api/register", {{"user_id", "alice"}, {"password", "Xk9mQz2a"}});
  REQUIRE(reg);
  CHECK(reg->status == 201);
  CHECK(json::parse(reg->body) == json{{"ok", true}});

  auto dup = post(c, "/api/register", {{"user_id", "alice"}, {"password", "Xk9mQz2a"}});
  CHECK(dup->status == 409);
  auto weak = post(c, "/api/register", {{"user_id", "bob"}, {"password", "abc"}});
  CHECK(weak->status == 400);
  CHECK(json::parse(weak->body)["error"] == "weak_password");
  auto garbage = c.Post("/api/register", "{not json", "application/json");
  CHECK(garbage->status == 400);
  auto missing = post(c, "/api/register", {{"user_id", "bob"}});
  CHECK(missing->status == 400);

  auto init = post(c, "/api/login/init", {{"user_id", "alice"}, {"secret", "Xk9mQz2a"}, {"mode", "character"}});
  REQUIRE(init);
  REQUIRE(init->status == 200);
  const json ticket = json::parse(init->body);
  CHECK(ticket["mode"] == "character");
  CHECK(ticket["expires_in_s"] == 120);
  const auto png = base64_decode(ticket["image"].get<std::string>());
  const cv::Mat img = cv::imdecode(png, cv::IMREAD_COLOR);
  CHECK(img.cols == 400);
  CHECK(img.rows == 100);
  // Only id, image, mode and lifetime go out.
  CHECK(ticket.size() == 4);

  const std::string id = ticket["challenge_id"];
  const json body{{"challenge_id", id}, {"clicks", clicks_for(*live.service, id, "Xk9mQz2a")}};
  auto verify = post(c, "/api/login/verify", body);
  REQUIRE(verify->status == 200);
  const json result = json::parse(verify->body);
  CHECK(result["status"] == "accepted");
  CHECK(result["token"].get<std::string>().size() == 64);

  CHECK(post(c, "/api/login/verify", body)->status == 410);
  CHECK(post(c, "/api/login/verify", {{"challenge_id", "0000"}, {"clicks", json::array()}})->status == 404);
}

TEST_CASE("HTTP pending, rejected, datagram and rate limit") {
  LiveServer live;
  auto c = live.client();
  post(c, "/api/register", {{"user_id", "alice"}, {"password", "Xk9mQz2a"}});

  SECTION("slight mistake returns a pending ticket") {
    auto init = post(c, "/api/login/init", {{"user_id", "alice"}, {"secret", "Xk9mQz2a"}, {"mode", "character"}});
    const std::string id = json::parse(init->body)["challenge_id"];
    json clicks = clicks_for(*live.service, id, "Xk9mQz2a");
    clicks.erase(clicks.begin());
    const json r = json::parse(post(c, "/api/login/verify", {{"challenge_id", id}, {"clicks", clicks}})->body);
    CHECK(r["status"] == "pending");
    CHECK(r.contains("challenge_id"));
    CHECK(r.contains("image"));
    CHECK(!r.contains("token"));
    const std::string next = r["challenge_id"];
    const json r2 = json::parse(
        post(c, "/api/login/verify", {{"challenge_id", next}, {"clicks", clicks_for(*live.service, next, "Xk9mQz2a")}})
            ->body);
    CHECK(r2["status"] == "accepted");
  }
  SECTION("datagram") {
    auto bad = post(c, "/api/login/init", {{"user_id", "alice"}, {"secret", "zz"}, {"mode", "datagram"}});
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body)["error"] == "malformed_secret");
    auto init = post(c, "/api/login/init",
                     {{"user_id", "alice"}, {"secret", client_hash("Xk9mQz2a")}, {"mode", "datagram"}});
    REQUIRE(init->status == 200);
    const json t = json::parse(init->body);
    CHECK(t["mode"] == "datagram");
    const cv::Mat img = cv::imdecode(base64_decode(t["image"]), cv::IMREAD_COLOR);
    CHECK(img.cols == 480);
    CHECK(img.rows == 120);
  }
  SECTION("flooding is rate limited") {
    int rejected = 0;
    int limited = 0;
    for (int i = 0; i < 6; ++i) {
      auto init = post(c, "/api/login/init", {{"user_id", "alice"}, {"secret", "guess-999"}, {"mode", "character"}});
      if (init->status == 429) {
        ++limited;
        continue;
      }
      const std::string id = json::parse(init->body)["challenge_id"];
      const json r =
          json::parse(post(c, "/api/login/verify", {{"challenge_id", id}, {"clicks", json::array()}})->body);
      rejected += r["status"] == "rejected";
    }
    CHECK(rejected == 3);
    CHECK(limited == 3);
  }
  SECTION("unknown mode") {
    auto r = post(c, "/api/login/init", {{"user_id", "alice"}, {"secret", "x"}, {"mode", "audio"}});
    CHECK(r->status == 400);
  }
}

TEST_CASE("static files are served at /") {
  testing::TempDir site;
  std::ofstream(site.path() / "index.html") << "<html>picap</html>";
  LiveServer live(site.path());
  auto c = live.client();
  auto r = c.Get("/index.html");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(r->body == "<html>picap</html>");
}
