#include "core/pending_store.hpp"

#include <chrono>

#include "core/crypto.hpp"
#include "core/error.hpp"

namespace picap {

namespace {
constexpr auto kTombstoneGrace = std::chrono::minutes(10);
}

SecretString& SecretString::operator=(SecretString&& other) noexcept {
  if (this != &other) {
    wipe();
    value_ = std::move(other.value_);
    other.wipe();
  }
  return *this;
}

void SecretString::wipe() noexcept { secure_wipe(value_); }

void PendingLoginStore::put(PendingLogin login) {
  std::lock_guard lock(mutex_);
  const std::string id = login.challenge_id;
  if (live_.contains(id) || tombstones_.contains(id)) {
    throw Error(Errc::invalid_argument, "challenge id reused");
  }
  ++per_key_[login.bucket_key];
  live_.emplace(id, std::move(login));
}

void PendingLoginStore::retire(std::unordered_map<std::string, PendingLogin>::iterator it, Tomb reason) {
  auto key = per_key_.find(it->second.bucket_key);
  if (key != per_key_.end() && --key->second == 0) per_key_.erase(key);
  tombstones_[it->first] = Tombstone{reason, it->second.expires_at + kTombstoneGrace};
  live_.erase(it);
}

PendingLogin PendingLoginStore::take(std::string_view challenge_id, TimePoint now) {
  std::lock_guard lock(mutex_);
  const std::string id(challenge_id);
  if (auto tomb = tombstones_.find(id); tomb != tombstones_.end()) {
    if (tomb->second.reason == Tomb::expired) throw Error(Errc::expired, "challenge expired");
    throw Error(Errc::already_consumed, "challenge already used");
  }
  auto it = live_.find(id);
  if (it == live_.end()) throw Error(Errc::unknown_challenge, "unknown challenge");
  if (it->second.expires_at <= now) {
    retire(it, Tomb::expired);
    throw Error(Errc::expired, "challenge expired");
  }
  auto node = live_.extract(it);
  auto key = per_key_.find(node.mapped().bucket_key);
  if (key != per_key_.end() && --key->second == 0) per_key_.erase(key);
  tombstones_[id] = Tombstone{Tomb::consumed, node.mapped().expires_at + kTombstoneGrace};
  return std::move(node.mapped());
}

std::size_t PendingLoginStore::purge(TimePoint now) {
  std::lock_guard lock(mutex_);
  std::size_t evicted = 0;
  for (auto it = live_.begin(); it != live_.end();) {
    if (it->second.expires_at <= now) {
      auto victim = it++;
      retire(victim, Tomb::expired);
      ++evicted;
    } else {
      ++it;
    }
  }
  std::erase_if(tombstones_, [now](const auto& kv) { return kv.second.keep_until <= now; });
  return evicted;
}

std::size_t PendingLoginStore::outstanding(std::string_view bucket_key) const {
  std::lock_guard lock(mutex_);
  auto it = per_key_.find(std::string(bucket_key));
  return it == per_key_.end() ? 0 : it->second;
}

std::size_t PendingLoginStore::size() const {
  std::lock_guard lock(mutex_);
  return live_.size();
}

}  // namespace picap
