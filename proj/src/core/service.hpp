#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/fsm.hpp"
#include "core/pending_store.hpp"
#include "core/render.hpp"
#include "core/service_config.hpp"
#include "core/user_store.hpp"

namespace picap {

struct ChallengeTicket {
  std::string challenge_id;
  std::vector<std::uint8_t> image;  // PNG
  Mode mode = Mode::character;
  TimePoint issued_at;
  TimePoint expires_at;
};

enum class LoginStatus { accepted, pending_rechallenge, rejected };

const char* to_string(LoginStatus status) noexcept;

struct LoginResult {
  LoginStatus status = LoginStatus::rejected;
  std::optional<std::string> token;        // iff accepted
  std::optional<ChallengeTicket> next;     // iff pending_rechallenge
};

struct ServiceCounters {
  std::uint64_t challenges_issued = 0;
  std::uint64_t credential_comparisons = 0;
  // Indexed by Outcome: the CAPTCHA outcome in force when a comparison ran.
  std::array<std::uint64_t, 3> comparisons_by_outcome{};
  std::array<std::uint64_t, 3> outcomes{};
};

struct ServiceOptions {
  ServiceConfig config;
  std::function<TimePoint()> clock = [] { return Clock::now(); };
  std::function<std::uint64_t()> seed_source = secure_seed;
  // Receives the exact string each challenge is generated from.
  std::function<void(std::string_view)> generation_observer;
};

/// Login flow in which the CAPTCHA is generated from the credentials of the
/// very request it guards. Thread-safe.
class AuthService {
 public:
  AuthService(const std::filesystem::path& data_dir, ServiceOptions options);

  /// Throws duplicate_user, weak_password, invalid_argument.
  CredentialRecord register_user(std::string_view user_id, std::string_view password);

  /// `secret` is the password in character mode and the 16-hex-digit client
  /// hash in datagram mode. A challenge is issued whether or not the user
  /// exists. Throws rate_limited, malformed_secret, invalid_argument.
  ChallengeTicket login_init(std::string_view user_id, std::string_view secret, Mode mode,
                             std::string_view source = "local");

  /// Throws unknown_challenge, expired, already_consumed.
  LoginResult login_verify(std::string_view challenge_id, std::span<const Point> clicks);

  ServiceCounters counters() const;

  /// What the issued image shows, for scripted clients and tests.
  std::optional<ChallengeView> visible_challenge(std::string_view challenge_id) const;

  const ServiceConfig& config() const noexcept { return options_.config; }
  const UserStore& users() const noexcept { return users_; }
  std::size_t pending_count() const { return pending_.size(); }

 private:
  struct Issued {
    PendingLogin login;
    ChallengeTicket ticket;
  };

  Issued issue(std::string_view user_id, std::string_view secret, SecretKind kind, Mode mode,
               FsmState state, unsigned attempts, std::string bucket_key, TimePoint now);
  bool credentials_match(const PendingLogin& login, const std::vector<int>& blocks);
  TokenBucket fresh_bucket(TimePoint now) const;

  ServiceOptions options_;
  UserStore users_;
  PendingLoginStore pending_;
  CredentialRecord decoy_;

  std::mutex limiter_mutex_;
  std::map<std::string, TokenBucket, std::less<>> buckets_;

  std::atomic<std::uint64_t> challenges_issued_{0};
  std::atomic<std::uint64_t> comparisons_{0};
  std::array<std::atomic<std::uint64_t>, 3> comparisons_by_outcome_{};
  std::array<std::atomic<std::uint64_t>, 3> outcomes_{};
};

}  // namespace picap
