#include <catch_amalgamated.hpp>

#include <regex>
#include <thread>

#include <sodium.h>
#include <sqlite3.h>

#include "core/crypto.hpp"
#include "core/error.hpp"
#include "core/pending_store.hpp"
#include "core/user_store.hpp"
#include "support.hpp"

using namespace picap;

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

Digest sodium_sha256(std::span<const std::uint8_t> salt, std::string_view text) {
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  crypto_hash_sha256_update(&st, salt.data(), salt.size());
  crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(text.data()), text.size());
  Digest out;
  crypto_hash_sha256_final(&st, out.data());
  return out;
}

std::string sodium_client_hash(std::string_view text) {
  const Digest d = sodium_sha256({}, text);
  char hex[17];
  sodium_bin2hex(hex, sizeof hex, d.data(), 8);
  return hex;
}

PendingLogin pending(std::string id, std::string key, TimePoint expires) {
  PendingLogin p;
  p.challenge_id = std::move(id);
  p.user_id = "u";
  p.secret = SecretString("hunter22");
  p.bucket_key = std::move(key);
  p.expires_at = expires;
  return p;
}

}  // namespace

TEST_CASE("salted_hash matches an independent SHA-256") {
  REQUIRE(sodium_init() >= 0);
  const Salt salt = random_salt();
  CHECK(salted_hash(salt, "Xk9mQz2a") == sodium_sha256(salt, "Xk9mQz2a"));
  CHECK(salted_hash(salt, "Xk9mQz2a") == salted_hash(salt, "Xk9mQz2a"));
  // Known vector: SHA-256("abc").
  CHECK(to_hex(sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("abc"), 3))) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("client_hash format and cross-check on 100 inputs") {
  REQUIRE(sodium_init() >= 0);
  const std::regex shape("^[0-9a-f]{16}$");
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    std::string text;
    const auto len = rng.below(40);
    for (std::size_t j = 0; j < len; ++j) text.push_back(static_cast<char>(rng.below(256)));
    const auto h = client_hash(text);
    REQUIRE(std::regex_match(h, shape));
    REQUIRE(is_client_hash(h));
    REQUIRE(h == sodium_client_hash(text));
    REQUIRE(client_hash(text) == h);
  }
  CHECK(!is_client_hash("zz"));
  CHECK(!is_client_hash("0123456789ABCDEF"));
  CHECK(!is_client_hash("0123456789abcdef0"));
}

TEST_CASE("digest_equal, hex, base64") {
  const Digest a{1, 2, 3};
  Digest b = a;
  CHECK(digest_equal(a, b));
  b[31] ^= 1;
  CHECK(!digest_equal(a, b));
  CHECK(!digest_equal(std::span(a).first(4), a));
  const std::vector<std::uint8_t> bytes{'f', 'o', 'o', 'b', 'a'};
  CHECK(base64_encode(bytes) == "Zm9vYmE=");
  CHECK(to_hex(bytes) == "666f6f6261");
  CHECK(random_salt() != random_salt());
  std::string s = "secret";
  secure_wipe(s);
  CHECK(s.empty());
}

TEST_CASE("user store") {
  testing::TempDir dir;
  const auto db = dir.path() / "users.db";
  CredentialRecord rec{"alice", random_salt(), {}, {}};
  rec.salted_hash = salted_hash(rec.salt, "Xk9mQz2a");
  {
    UserStore store(db);
    store.insert(rec);
    CHECK(store.size() == 1);
    CHECK(code_of([&] { store.insert(rec); }) == Errc::duplicate_user);
    CHECK(!store.find("bob"));
  }
  UserStore reopened(db);
  const auto found = reopened.find("alice");
  REQUIRE(found);
  CHECK(*found == rec);

  // Schema holds exactly the credential columns.
  sqlite3* raw = nullptr;
  REQUIRE(sqlite3_open(db.c_str(), &raw) == SQLITE_OK);
  sqlite3_stmt* stmt = nullptr;
  REQUIRE(sqlite3_prepare_v2(raw, "SELECT name FROM pragma_table_info('users') ORDER BY cid", -1, &stmt, nullptr) ==
          SQLITE_OK);
  std::vector<std::string> cols;
  while (sqlite3_step(stmt) == SQLITE_ROW) cols.emplace_back(reinterpret_cast<const char*>(sqlite3_column_text(stmt, 0)));
  sqlite3_finalize(stmt);
  REQUIRE(sqlite3_prepare_v2(raw, "PRAGMA journal_mode", -1, &stmt, nullptr) == SQLITE_OK);
  REQUIRE(sqlite3_step(stmt) == SQLITE_ROW);
  const std::string mode = reinterpret_cast<const char*>(sqlite3_column_text(stmt, 0));
  sqlite3_finalize(stmt);
  sqlite3_close(raw);
  CHECK(cols == std::vector<std::string>{"user_id", "salt", "salted_hash", "salted_client_hash"});
  CHECK(mode == "wal");
}

TEST_CASE("user store serializes concurrent inserts") {
  testing::TempDir dir;
  UserStore store(dir.path() / "users.db");
  std::atomic<int> ok{0}, dup{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < 8; ++t) {
    pool.emplace_back([&, t] {
      for (int i = 0; i < 25; ++i) {
        CredentialRecord rec{"user" + std::to_string(i), random_salt(), {}, {}};
        rec.salted_hash[0] = static_cast<std::uint8_t>(t);
        try {
          store.insert(rec);
          ++ok;
        } catch (const Error& e) {
          if (e.code() == Errc::duplicate_user) ++dup;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  CHECK(ok == 25);
  CHECK(dup == 7 * 25);
  CHECK(store.size() == 25);
}

TEST_CASE("pending store take-once semantics") {
  PendingLoginStore store;
  const TimePoint t0 = TimePoint{} + std::chrono::hours(10);
  store.put(pending("c1", "k", t0 + std::chrono::seconds(120)));
  store.put(pending("c2", "k", t0 + std::chrono::seconds(120)));
  CHECK(store.outstanding("k") == 2);
  CHECK(code_of([&] { store.put(pending("c1", "k", t0)); }) == Errc::invalid_argument);

  const auto got = store.take("c1", t0);
  CHECK(got.secret.view() == "hunter22");
  CHECK(store.outstanding("k") == 1);
  CHECK(code_of([&] { store.take("c1", t0); }) == Errc::already_consumed);
  CHECK(code_of([&] { store.take("nope", t0); }) == Errc::unknown_challenge);

  CHECK(code_of([&] { store.take("c2", t0 + std::chrono::seconds(121)); }) == Errc::expired);
  CHECK(code_of([&] { store.take("c2", t0 + std::chrono::seconds(122)); }) == Errc::expired);
  CHECK(store.outstanding("k") == 0);
  CHECK(store.size() == 0);
}

TEST_CASE("pending store purge evicts expired entries") {
  PendingLoginStore store;
  const TimePoint t0 = TimePoint{} + std::chrono::hours(10);
  store.put(pending("a", "k", t0 + std::chrono::seconds(10)));
  store.put(pending("b", "k", t0 + std::chrono::seconds(200)));
  CHECK(store.purge(t0 + std::chrono::seconds(11)) == 1);
  CHECK(store.size() == 1);
  CHECK(store.outstanding("k") == 1);
  CHECK(code_of([&] { store.take("a", t0 + std::chrono::seconds(11)); }) == Errc::expired);
  // Tombstones go after their grace period; the id is then unknown.
  store.purge(t0 + std::chrono::hours(1));
  CHECK(code_of([&] { store.take("a", t0 + std::chrono::hours(1)); }) == Errc::unknown_challenge);
}

TEST_CASE("concurrent takes succeed exactly once") {
  PendingLoginStore store;
  const TimePoint t0 = TimePoint{} + std::chrono::hours(10);
  store.put(pending("c", "k", t0 + std::chrono::seconds(120)));
  std::atomic<int> taken{0}, consumed{0};
  std::vector<std::thread> pool;
  for (int i = 0; i < 100; ++i) {
    pool.emplace_back([&] {
      try {
        store.take("c", t0);
        ++taken;
      } catch (const Error& e) {
        if (e.code() == Errc::already_consumed) ++consumed;
      }
    });
  }
  for (auto& th : pool) th.join();
  CHECK(taken == 1);
  CHECK(consumed == 99);
}

TEST_CASE("secret strings are wiped when moved from") {
  SecretString a("pw123456");
  SecretString b(std::move(a));
  CHECK(b.view() == "pw123456");
  CHECK(a.view().empty());  // NOLINT(bugprone-use-after-move)
}
