#include <catch_amalgamated.hpp>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <thread>

#include <sodium.h>

#include "core/crypto.hpp"
#include "core/error.hpp"
#include "core/service.hpp"
#include "support.hpp"

using namespace picap;
using std::chrono::seconds;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected picap::Error");
  return Errc::io;
}

struct Harness {
  testing::TempDir dir;
  testing::FakeClock clock;
  std::vector<std::string> generated_from;
  std::mutex mu;
  std::unique_ptr<AuthService> service;

  explicit Harness(ServiceConfig cfg = {}) {
    ServiceOptions opts;
    opts.config = std::move(cfg);
    opts.clock = [this] { return clock.now; };
    opts.generation_observer = [this](std::string_view s) {
      std::lock_guard lock(mu);
      generated_from.emplace_back(s);
    };
    service = std::make_unique<AuthService>(dir.path(), std::move(opts));
  }
};

// Clicks a person who knows `secret` would make on the visible challenge.
std::vector<Point> solve(const AuthService& svc, const std::string& challenge_id, std::string_view secret,
                         int drop_sp = 0, bool add_gp = false) {
  const auto view = svc.visible_challenge(challenge_id);
  REQUIRE(view);
  std::vector<Point> clicks;
  if (view->mode == Mode::character) {
    for (std::size_t i = 0; i < view->labels.size(); ++i) {
      const bool in_secret = secret.find(view->labels[i][0]) != std::string_view::npos;
      if (in_secret) {
        if (drop_sp > 0) {
          --drop_sp;
          continue;
        }
        clicks.push_back(view->centers[i]);
      } else if (add_gp) {
        clicks.push_back(view->centers[i]);
        add_gp = false;
      }
    }
    return clicks;
  }
  // Datagram: find the block order whose labels spell the secret.
  std::vector<int> order;
  std::vector<bool> used(view->labels.size(), false);
  std::function<bool(std::string_view)> search = [&](std::string_view rest) {
    if (rest.empty()) return order.size() == view->labels.size();
    for (std::size_t i = 0; i < view->labels.size(); ++i) {
      if (used[i] || !rest.starts_with(view->labels[i])) continue;
      used[i] = true;
      order.push_back(static_cast<int>(i));
      if (search(rest.substr(view->labels[i].size()))) return true;
      order.pop_back();
      used[i] = false;
    }
    return false;
  };
  REQUIRE(search(secret));
  for (int i : order) clicks.push_back(view->centers[i]);
  return clicks;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("register") {
  REQUIRE(sodium_init() >= 0);
  Harness h;
  const auto rec = h.service->register_user("alice", "Xk9mQz2a");
  Digest ref;
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  crypto_hash_sha256_update(&st, rec.salt.data(), rec.salt.size());
  crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>("Xk9mQz2a"), 8);
  crypto_hash_sha256_final(&st, ref.data());
  CHECK(rec.salted_hash == ref);
  CHECK(h.service->users().find("alice") == rec);

  CHECK(code_of([&] { h.service->register_user("alice", "another1"); }) == Errc::duplicate_user);
  CHECK(code_of([&] { h.service->register_user("bob", "abc"); }) == Errc::weak_password);
  CHECK(code_of([&] { h.service->register_user("", "abcdefg"); }) == Errc::invalid_argument);
  const auto other = h.service->register_user("carol", "Xk9mQz2a");
  CHECK(other.salt != rec.salt);
  CHECK(other.salted_hash != rec.salted_hash);
}

TEST_CASE("login_init builds the challenge from the submitted secret") {
  Harness h;
  h.service->register_user("alice", "Xk9mQz2a");
  const auto t = h.service->login_init("alice", "Xk9mQz2a", Mode::character);
  CHECK(t.mode == Mode::character);
  CHECK(t.expires_at - t.issued_at == seconds(120));
  CHECK(t.challenge_id.size() == 32);
  CHECK(t.image.size() > 100);
  REQUIRE(h.generated_from.size() == 1);
  CHECK(h.generated_from[0] == "Xk9mQz2a");

  const auto view = h.service->visible_challenge(t.challenge_id);
  REQUIRE(view);
  int from_password = 0;
  for (const auto& l : view->labels) from_password += std::string("Xk9mQz2a").find(l[0]) != std::string::npos;
  CHECK(from_password == 4);
  CHECK(view->labels.size() == 8);

  SECTION("wrong password drives a challenge from the wrong password") {
    h.service->login_init("alice", "wrongPW77", Mode::character);
    CHECK(h.generated_from.back() == "wrongPW77");
  }
  SECTION("datagram secret must be a client hash") {
    CHECK(code_of([&] { h.service->login_init("alice", "zz", Mode::datagram); }) == Errc::malformed_secret);
    const auto hash = client_hash("Xk9mQz2a");
    const auto dt = h.service->login_init("alice", hash, Mode::datagram);
    CHECK(dt.mode == Mode::datagram);
    CHECK(h.generated_from.back() == hash);
  }
  SECTION("empty secret") {
    CHECK(code_of([&] { h.service->login_init("alice", "", Mode::character); }) == Errc::malformed_secret);
  }
}

TEST_CASE("unknown users get a ticket of the same shape") {
  Harness h;
  h.service->register_user("alice", "Xk9mQz2a");
  const auto known = h.service->login_init("alice", "Xk9mQz2a", Mode::character);
  const auto unknown = h.service->login_init("mallory", "Fabricated9", Mode::character);
  CHECK(unknown.mode == known.mode);
  CHECK(unknown.challenge_id.size() == known.challenge_id.size());
  CHECK(unknown.expires_at - unknown.issued_at == known.expires_at - known.issued_at);
  CHECK(h.service->visible_challenge(unknown.challenge_id)->labels.size() ==
        h.service->visible_challenge(known.challenge_id)->labels.size());

  // And verification of an unknown user's solved challenge is rejected,
  // after a credential comparison against the decoy record.
  const auto r = h.service->login_verify(unknown.challenge_id, solve(*h.service, unknown.challenge_id, "Fabricated9"));
  CHECK(r.status == LoginStatus::rejected);
  CHECK(h.service->counters().credential_comparisons == 1);
}

TEST_CASE("login_init timing does not depend on whether the user exists") {
  ServiceConfig cfg;
  cfg.bucket_capacity = 1000;
  Harness h(cfg);
  h.service->register_user("alice", "Xk9mQz2a");
  std::vector<double> known, unknown;
  auto time_one = [&](const char* user, std::vector<double>& out) {
    const auto start = std::chrono::steady_clock::now();
    h.service->login_init(user, "Xk9mQz2a", Mode::character);
    out.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  };
  for (int i = 0; i < 41; ++i) {
    time_one("alice", known);
    time_one("nobody", unknown);
  }
  std::sort(known.begin(), known.end());
  std::sort(unknown.begin(), unknown.end());
  const double ratio = known[20] / unknown[20];
  INFO("median ratio " << ratio);
  CHECK(ratio > 0.5);
  CHECK(ratio < 2.0);
}

TEST_CASE("verify outcomes") {
  Harness h;
  h.service->register_user("alice", "Xk9mQz2a");

  SECTION("correct password and all SP clicks is accepted") {
    const auto t = h.service->login_init("alice", "Xk9mQz2a", Mode::character);
    const auto r = h.service->login_verify(t.challenge_id, solve(*h.service, t.challenge_id, "Xk9mQz2a"));
    CHECK(r.status == LoginStatus::accepted);
    REQUIRE(r.token);
    CHECK(r.token->size() == 64);
    CHECK(!r.next);
    CHECK(code_of([&] { h.service->login_verify(t.challenge_id, {}); }) == Errc::already_consumed);
  }
  SECTION("wrong password solved correctly is still rejected") {
    const auto t = h.service->login_init("alice", "WrongPass9", Mode::character);
    const auto r = h.service->login_verify(t.challenge_id, solve(*h.service, t.challenge_id, "WrongPass9"));
    CHECK(r.status == LoginStatus::rejected);
    CHECK(!r.token);
    CHECK(h.service->counters().credential_comparisons == 1);
  }
  SECTION("slight mistake earns a fresh challenge from the same secret") {
    const auto t = h.service->login_init("alice", "Xk9mQz2a", Mode::character);
    const auto r = h.service->login_verify(t.challenge_id, solve(*h.service, t.challenge_id, "Xk9mQz2a", 1));
    REQUIRE(r.status == LoginStatus::pending_rechallenge);
    REQUIRE(r.next);
    CHECK(!r.token);
    CHECK(r.next->challenge_id != t.challenge_id);
    CHECK(h.generated_from.size() == 2);
    CHECK(h.generated_from[1] == "Xk9mQz2a");
    const auto r2 = h.service->login_verify(r.next->challenge_id, solve(*h.service, r.next->challenge_id, "Xk9mQz2a"));
    CHECK(r2.status == LoginStatus::accepted);
  }
  SECTION("slight twice is rejected") {
    const auto t = h.service->login_init("alice", "Xk9mQz2a", Mode::character);
    const auto r = h.service->login_verify(t.challenge_id, solve(*h.service, t.challenge_id, "Xk9mQz2a", 1));
    REQUIRE(r.next);
    const auto r2 = h.service->login_verify(r.next->challenge_id, solve(*h.service, r.next->challenge_id, "Xk9mQz2a", 1));
    CHECK(r2.status == LoginStatus::rejected);
  }
  SECTION("a distractor click fails") {
    const auto t = h.service->login_init("alice", "Xk9mQz2a", Mode::character);
    const auto r = h.service->login_verify(t.challenge_id, solve(*h.service, t.challenge_id, "Xk9mQz2a", 0, true));
    CHECK(r.status == LoginStatus::rejected);
  }
  SECTION("clicks outside the image fail") {
    const auto t = h.service->login_init("alice", "Xk9mQz2a", Mode::character);
    const std::vector<Point> bad{{-5, 9000}};
    CHECK(h.service->login_verify(t.challenge_id, bad).status == LoginStatus::rejected);
  }
  SECTION("expired and unknown challenges") {
    const auto t = h.service->login_init("alice", "Xk9mQz2a", Mode::character);
    h.clock.advance(seconds(121));
    CHECK(code_of([&] { h.service->login_verify(t.challenge_id, {}); }) == Errc::expired);
    CHECK(code_of([&] { h.service->login_verify("deadbeef", {}); }) == Errc::unknown_challenge);
  }
}

TEST_CASE("datagram login") {
  Harness h;
  h.service->register_user("alice", "Xk9mQz2a");
  const auto hash = client_hash("Xk9mQz2a");

  const auto t = h.service->login_init("alice", hash, Mode::datagram);
  const auto clicks = solve(*h.service, t.challenge_id, hash);
  CHECK(h.service->login_verify(t.challenge_id, clicks).status == LoginStatus::accepted);

  const auto t2 = h.service->login_init("alice", hash, Mode::datagram);
  auto wrong = solve(*h.service, t2.challenge_id, hash);
  std::rotate(wrong.begin(), wrong.begin() + 1, wrong.end());
  CHECK(h.service->login_verify(t2.challenge_id, wrong).status == LoginStatus::rejected);

  const auto t3 = h.service->login_init("alice", client_hash("not-the-pw"), Mode::datagram);
  const auto r3 = h.service->login_verify(t3.challenge_id, solve(*h.service, t3.challenge_id, client_hash("not-the-pw")));
  CHECK(r3.status == LoginStatus::rejected);
}

TEST_CASE("passwords with too few usable glyphs fall back to datagram") {
  Harness h;
  h.service->register_user("dave", "aaaaaaaa");
  const auto t = h.service->login_init("dave", "aaaaaaaa", Mode::character);
  CHECK(t.mode == Mode::datagram);
  CHECK(h.generated_from.back() == client_hash("aaaaaaaa"));
  const auto r = h.service->login_verify(t.challenge_id, solve(*h.service, t.challenge_id, client_hash("aaaaaaaa")));
  CHECK(r.status == LoginStatus::accepted);
}

TEST_CASE("credentials are compared only after a Full outcome") {
  ServiceConfig cfg;
  cfg.bucket_capacity = 100000;
  Harness h(cfg);
  h.service->register_user("alice", "Xk9mQz2a");
  Rng rng(31);
  std::uint64_t fulls = 0;
  for (int i = 0; i < 300; ++i) {
    const bool right = rng.below(2);
    const std::string pw = right ? "Xk9mQz2a" : "Wr0ngPass";
    const auto t = h.service->login_init("alice", pw, Mode::character);
    const auto kind = rng.below(3);
    const auto r = h.service->login_verify(t.challenge_id, solve(*h.service, t.challenge_id, pw, kind == 1 ? 1 : 0, kind == 2));
    if (kind == 0) ++fulls;
    if (r.next) {
      const auto r2 = h.service->login_verify(r.next->challenge_id, solve(*h.service, r.next->challenge_id, pw));
      ++fulls;
      CHECK(r2.status == (right ? LoginStatus::accepted : LoginStatus::rejected));
    }
  }
  const auto c = h.service->counters();
  CHECK(c.credential_comparisons == fulls);
  CHECK(c.comparisons_by_outcome[static_cast<int>(Outcome::slight)] == 0);
  CHECK(c.comparisons_by_outcome[static_cast<int>(Outcome::fail)] == 0);
  CHECK(c.outcomes[static_cast<int>(Outcome::full)] == fulls);
}

TEST_CASE("rate limiting") {
  Harness h;
  h.service->register_user("alice", "Xk9mQz2a");
  auto flood_once = [&](const char* source) {
    const auto t = h.service->login_init("alice", "guess-123", Mode::character, source);
    return h.service->login_verify(t.challenge_id, {}).status;
  };
  for (int i = 0; i < 3; ++i) CHECK(flood_once("10.0.0.1") == LoginStatus::rejected);
  CHECK(code_of([&] { flood_once("10.0.0.1"); }) == Errc::rate_limited);
  // Another source has its own bucket.
  CHECK(flood_once("10.0.0.2") == LoginStatus::rejected);
  h.clock.advance(seconds(6 * 3600));
  for (int i = 0; i < 3; ++i) CHECK(flood_once("10.0.0.1") == LoginStatus::rejected);
  CHECK(code_of([&] { flood_once("10.0.0.1"); }) == Errc::rate_limited);

  SECTION("outstanding challenges hold a token each") {
    Harness g;
    for (int i = 0; i < 3; ++i) g.service->login_init("bob", "guess-123", Mode::character, "s");
    CHECK(code_of([&] { g.service->login_init("bob", "guess-123", Mode::character, "s"); }) == Errc::rate_limited);
    // Expired challenges release their claim.
    g.clock.advance(seconds(121));
    CHECK_NOTHROW(g.service->login_init("bob", "guess-123", Mode::character, "s"));
  }
}

TEST_CASE("concurrent verifies of one challenge: exactly one is processed") {
  Harness h;
  h.service->register_user("alice", "Xk9mQz2a");
  const auto t = h.service->login_init("alice", "Xk9mQz2a", Mode::character);
  const auto clicks = solve(*h.service, t.challenge_id, "Xk9mQz2a");
  std::atomic<int> processed{0}, consumed{0}, other{0};
  std::vector<std::thread> pool;
  for (int i = 0; i < 100; ++i) {
    pool.emplace_back([&] {
      try {
        h.service->login_verify(t.challenge_id, clicks);
        ++processed;
      } catch (const Error& e) {
        (e.code() == Errc::already_consumed ? consumed : other)++;
      }
    });
  }
  for (auto& th : pool) th.join();
  CHECK(processed == 1);
  CHECK(consumed == 99);
  CHECK(other == 0);
}

TEST_CASE("no plaintext secret reaches the data directory") {
  Harness h;
  const std::string pw = "Plain-Text-Secret-42";
  h.service->register_user("erin", pw);
  const auto t = h.service->login_init("erin", pw, Mode::character);
  CHECK(h.service->login_verify(t.challenge_id, solve(*h.service, t.challenge_id, pw)).status == LoginStatus::accepted);
  const auto hash = client_hash(pw);
  const auto dt = h.service->login_init("erin", hash, Mode::datagram);
  CHECK(h.service->login_verify(dt.challenge_id, solve(*h.service, dt.challenge_id, hash)).status ==
        LoginStatus::accepted);

  int files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(h.dir.path())) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto bytes = slurp(entry.path());
    INFO(entry.path());
    CHECK(bytes.find(pw) == std::string::npos);
    CHECK(bytes.find(hash) == std::string::npos);
  }
  CHECK(files >= 1);
}

TEST_CASE("service config") {
  ServiceConfig cfg;
  cfg.set("sp_count", "3");
  cfg.set("challenge_ttl_s", "60");
  cfg.set("image_width", "480");
  CHECK(cfg.challenge.sp_count == 3);
  CHECK(cfg.challenge.ttl == seconds(60));
  CHECK(code_of([&] { cfg.set("nope", "1"); }) == Errc::invalid_config);
  CHECK(code_of([&] { cfg.set("sp_count", "x"); }) == Errc::invalid_config);

  testing::TempDir dir;
  const auto path = dir.path() / "picap.conf";
  std::ofstream(path) << "# comment\nbucket_capacity = 5\nalphabet=abcdefghijk\n\n";
  const auto loaded = ServiceConfig::load(path);
  CHECK(loaded.bucket_capacity == 5);
  CHECK(loaded.challenge.alphabet == "abcdefghijk");
  std::ofstream(path) << "bogus line\n";
  CHECK(code_of([&] { ServiceConfig::load(path); }) == Errc::invalid_config);
}
