#include "core/user_store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cstring>
#include <memory>

#include "core/error.hpp"

namespace picap {

namespace {

struct StmtDeleter {
  void operator()(sqlite3_stmt* stmt) const noexcept { sqlite3_finalize(stmt); }
};
using Stmt = std::unique_ptr<sqlite3_stmt, StmtDeleter>;

Stmt prepare(sqlite3* db, const char* sql) {
  sqlite3_stmt* raw = nullptr;
  if (sqlite3_prepare_v2(db, sql, -1, &raw, nullptr) != SQLITE_OK) {
    throw Error(Errc::storage, sqlite3_errmsg(db));
  }
  return Stmt(raw);
}

template <std::size_t N>
void read_blob(sqlite3_stmt* stmt, int col, std::array<std::uint8_t, N>& out) {
  const auto* data = static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt, col));
  if (data == nullptr || sqlite3_column_bytes(stmt, col) != static_cast<int>(N)) {
    throw Error(Errc::storage, "corrupt credential row");
  }
  std::copy_n(data, N, out.begin());
}

}  // namespace

UserStore::UserStore(const std::filesystem::path& db_path) {
  if (sqlite3_open_v2(db_path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "cannot open database";
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error(Errc::storage, msg);
  }
  exec("PRAGMA journal_mode=WAL");
  exec("PRAGMA synchronous=FULL");
  exec(
      "CREATE TABLE IF NOT EXISTS users ("
      " user_id TEXT PRIMARY KEY,"
      " salt BLOB NOT NULL,"
      " salted_hash BLOB NOT NULL,"
      " salted_client_hash BLOB NOT NULL)");
}

UserStore::~UserStore() { sqlite3_close(db_); }

void UserStore::exec(const char* sql) const {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "sqlite error";
    sqlite3_free(err);
    throw Error(Errc::storage, msg);
  }
}

void UserStore::insert(const CredentialRecord& record) {
  std::lock_guard lock(mutex_);
  Stmt stmt = prepare(db_, "INSERT INTO users VALUES (?1, ?2, ?3, ?4)");
  sqlite3_bind_text(stmt.get(), 1, record.user_id.data(), static_cast<int>(record.user_id.size()),
                    SQLITE_TRANSIENT);
  sqlite3_bind_blob(stmt.get(), 2, record.salt.data(), static_cast<int>(record.salt.size()), SQLITE_TRANSIENT);
  sqlite3_bind_blob(stmt.get(), 3, record.salted_hash.data(), static_cast<int>(record.salted_hash.size()),
                    SQLITE_TRANSIENT);
  sqlite3_bind_blob(stmt.get(), 4, record.salted_client_hash.data(),
                    static_cast<int>(record.salted_client_hash.size()), SQLITE_TRANSIENT);
  const int rc = sqlite3_step(stmt.get());
  if (rc == SQLITE_CONSTRAINT) throw Error(Errc::duplicate_user, "user already registered");
  if (rc != SQLITE_DONE) throw Error(Errc::storage, sqlite3_errmsg(db_));
}

std::optional<CredentialRecord> UserStore::find(std::string_view user_id) const {
  std::lock_guard lock(mutex_);
  Stmt stmt = prepare(db_, "SELECT salt, salted_hash, salted_client_hash FROM users WHERE user_id = ?1");
  sqlite3_bind_text(stmt.get(), 1, user_id.data(), static_cast<int>(user_id.size()), SQLITE_TRANSIENT);
  const int rc = sqlite3_step(stmt.get());
  if (rc == SQLITE_DONE) return std::nullopt;
  if (rc != SQLITE_ROW) throw Error(Errc::storage, sqlite3_errmsg(db_));
  CredentialRecord rec;
  rec.user_id = std::string(user_id);
  read_blob(stmt.get(), 0, rec.salt);
  read_blob(stmt.get(), 1, rec.salted_hash);
  read_blob(stmt.get(), 2, rec.salted_client_hash);
  return rec;
}

std::size_t UserStore::size() const {
  std::lock_guard lock(mutex_);
  Stmt stmt = prepare(db_, "SELECT COUNT(*) FROM users");
  if (sqlite3_step(stmt.get()) != SQLITE_ROW) throw Error(Errc::storage, sqlite3_errmsg(db_));
  return static_cast<std::size_t>(sqlite3_column_int64(stmt.get(), 0));
}

}  // namespace picap
