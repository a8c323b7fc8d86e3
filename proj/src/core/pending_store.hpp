#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>

#include "core/captcha.hpp"
#include "core/fsm.hpp"
#include "core/render.hpp"

namespace picap {

/// Owned string that is wiped when destroyed or moved from.
class SecretString {
 public:
  SecretString() = default;
  explicit SecretString(std::string_view text) : value_(text) {}
  SecretString(const SecretString&) = default;
  SecretString& operator=(const SecretString&) = default;
  SecretString(SecretString&& other) noexcept : value_(std::move(other.value_)) { other.wipe(); }
  SecretString& operator=(SecretString&& other) noexcept;
  ~SecretString() { wipe(); }

  std::string_view view() const noexcept { return value_; }

 private:
  void wipe() noexcept;
  std::string value_;
};

enum class SecretKind { password, client_hash };

/// In-memory state for a login between challenge issue and verification.
/// Never persisted.
struct PendingLogin {
  std::string challenge_id;
  std::string user_id;
  SecretString secret;
  SecretKind secret_kind = SecretKind::password;
  AnyChallenge challenge;
  RegionMap region_map;
  FsmState state = FsmState::rejected;
  unsigned attempts = 0;
  std::string bucket_key;
  TimePoint expires_at;

  Mode mode() const noexcept {
    return std::holds_alternative<CharacterChallenge>(challenge) ? Mode::character : Mode::datagram;
  }
};

/// Take-once store keyed by challenge id. Consumed and expired ids leave a
/// tombstone so repeated verifications can be told apart from unknown ids.
class PendingLoginStore {
 public:
  void put(PendingLogin login);

  /// Removes and returns the entry. Throws unknown_challenge, expired or
  /// already_consumed.
  PendingLogin take(std::string_view challenge_id, TimePoint now);

  /// Evicts expired entries and stale tombstones; returns evicted entries.
  std::size_t purge(TimePoint now);

  /// Live entries issued under a rate-limit key.
  std::size_t outstanding(std::string_view bucket_key) const;
  std::size_t size() const;

  /// Runs `fn` on a live entry under the store lock; false if not live.
  template <class Fn>
  bool inspect(std::string_view challenge_id, Fn&& fn) const {
    std::lock_guard lock(mutex_);
    auto it = live_.find(std::string(challenge_id));
    if (it == live_.end()) return false;
    fn(static_cast<const PendingLogin&>(it->second));
    return true;
  }

 private:
  enum class Tomb { consumed, expired };
  struct Tombstone {
    Tomb reason;
    TimePoint keep_until;
  };

  void retire(std::unordered_map<std::string, PendingLogin>::iterator it, Tomb reason);

  mutable std::mutex mutex_;
  std::unordered_map<std::string, PendingLogin> live_;
  std::unordered_map<std::string, Tombstone> tombstones_;
  std::unordered_map<std::string, std::size_t> per_key_;
};

}  // namespace picap
