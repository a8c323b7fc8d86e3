#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "core/crypto.hpp"

struct sqlite3;

namespace picap {

struct CredentialRecord {
  std::string user_id;
  Salt salt{};
  Digest salted_hash{};          // H(salt . password)
  Digest salted_client_hash{};   // H(salt . client_hash(password)), for datagram logins

  bool operator==(const CredentialRecord&) const = default;
};

/// Durable user table in an SQLite database running in WAL mode. One
/// connection, writes serialized by a mutex.
class UserStore {
 public:
  explicit UserStore(const std::filesystem::path& db_path);
  ~UserStore();

  UserStore(const UserStore&) = delete;
  UserStore& operator=(const UserStore&) = delete;

  /// Throws duplicate_user when the id already exists.
  void insert(const CredentialRecord& record);
  std::optional<CredentialRecord> find(std::string_view user_id) const;
  std::size_t size() const;

 private:
  void exec(const char* sql) const;

  sqlite3* db_ = nullptr;
  mutable std::mutex mutex_;
};

}  // namespace picap
