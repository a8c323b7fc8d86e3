#include "core/service.hpp"

#include <system_error>

#include "core/crypto.hpp"
#include "core/error.hpp"

namespace picap {

namespace {

std::size_t index_of(Outcome o) { return static_cast<std::size_t>(o); }

void check_user_id(std::string_view user_id) {
  if (user_id.empty() || user_id.size() > 128) {
    throw Error(Errc::invalid_argument, "user_id must be 1..128 bytes");
  }
  for (unsigned char c : user_id) {
    if (c < 0x20 || c == 0x7f) throw Error(Errc::invalid_argument, "user_id contains control characters");
  }
}

std::string bucket_key_for(std::string_view user_id, std::string_view source) {
  std::string key(user_id);
  key.push_back('\n');
  key.append(source);
  return key;
}

}  // namespace

const char* to_string(LoginStatus status) noexcept {
  switch (status) {
    case LoginStatus::accepted: return "accepted";
    case LoginStatus::pending_rechallenge: return "pending";
    case LoginStatus::rejected: return "rejected";
  }
  return "rejected";
}

AuthService::AuthService(const std::filesystem::path& data_dir, ServiceOptions options)
    : options_(std::move(options)),
      users_([&] {
        std::error_code ec;
        std::filesystem::create_directories(data_dir, ec);
        if (ec) throw Error(Errc::io, "cannot create data directory: " + ec.message());
        return data_dir / "users.db";
      }()) {
  options_.config.validate();
  // Unknown users are checked against a throwaway record so the comparison
  // path costs the same as for a real account.
  decoy_.salt = random_salt();
  const auto filler = random_bytes(32);
  std::copy(filler.begin(), filler.end(), decoy_.salted_hash.begin());
  decoy_.salted_client_hash = decoy_.salted_hash;
}

CredentialRecord AuthService::register_user(std::string_view user_id, std::string_view password) {
  check_user_id(user_id);
  if (password.size() < options_.config.min_password_length) {
    throw Error(Errc::weak_password, "password must have at least " +
                                         std::to_string(options_.config.min_password_length) +
                                         " characters");
  }
  CredentialRecord rec;
  rec.user_id = std::string(user_id);
  rec.salt = random_salt();
  rec.salted_hash = salted_hash(rec.salt, password);
  std::string hashed = client_hash(password);
  rec.salted_client_hash = salted_hash(rec.salt, hashed);
  secure_wipe(hashed);
  users_.insert(rec);
  return rec;
}

TokenBucket AuthService::fresh_bucket(TimePoint now) const {
  TokenBucket b;
  b.capacity = options_.config.bucket_capacity;
  b.tokens = b.capacity;
  b.refill_amount = options_.config.bucket_refill;
  b.refill_interval = options_.config.bucket_interval;
  b.last_refill = now;
  return b;
}

AuthService::Issued AuthService::issue(std::string_view user_id, std::string_view secret,
                                       SecretKind kind, Mode mode, FsmState state,
                                       unsigned attempts, std::string bucket_key, TimePoint now) {
  const ServiceConfig& cfg = options_.config;
  Rng rng(options_.seed_source());
  Issued out;
  PendingLogin& login = out.login;

  std::string derived;
  std::string_view generation_input = secret;
  ChallengeConfig challenge_cfg = cfg.challenge;
  if (kind == SecretKind::password && mode == Mode::character &&
      adapt_to_password(secret, challenge_cfg)) {
    auto ch = build_character_challenge(user_id, secret, challenge_cfg, rng, now);
    StyleConfig style = cfg.style_for(Mode::character, static_cast<int>(ch.display.size()));
    style.seed = rng.next();
    auto rendered = render_character_challenge(ch, style);
    out.ticket.image = std::move(rendered.png);
    login.region_map = std::move(rendered.region_map);
    login.challenge = std::move(ch);
  } else {
    if (kind == SecretKind::password) {
      derived = client_hash(secret);
      generation_input = derived;
    }
    auto dg = build_datagram_challenge(user_id, generation_input, challenge_cfg, rng, now);
    StyleConfig style = cfg.style_for(Mode::datagram, static_cast<int>(dg.segments.size()));
    style.seed = rng.next();
    auto rendered = render_datagram_challenge(dg, style);
    out.ticket.image = std::move(rendered.png);
    login.region_map = std::move(rendered.region_map);
    login.challenge = std::move(dg);
  }
  if (options_.generation_observer) options_.generation_observer(generation_input);
  secure_wipe(derived);

  login.challenge_id = std::visit([](const auto& c) { return c.challenge_id; }, login.challenge);
  login.user_id = std::string(user_id);
  login.secret = SecretString(secret);
  login.secret_kind = kind;
  login.state = state;
  login.attempts = attempts;
  login.bucket_key = std::move(bucket_key);
  login.expires_at = now + challenge_cfg.ttl;

  out.ticket.challenge_id = login.challenge_id;
  out.ticket.mode = login.mode();
  out.ticket.issued_at = now;
  out.ticket.expires_at = login.expires_at;
  ++challenges_issued_;
  return out;
}

ChallengeTicket AuthService::login_init(std::string_view user_id, std::string_view secret, Mode mode,
                                        std::string_view source) {
  check_user_id(user_id);
  if (secret.empty()) throw Error(Errc::malformed_secret, "secret must not be empty");
  if (mode == Mode::datagram && !is_client_hash(secret)) {
    throw Error(Errc::malformed_secret, "datagram secret must be 16 lowercase hex digits");
  }
  const SecretKind kind = mode == Mode::datagram ? SecretKind::client_hash : SecretKind::password;
  const TimePoint now = options_.clock();
  pending_.purge(now);
  std::string key = bucket_key_for(user_id, source);

  // Each outstanding challenge holds a claim on one token, so a burst of
  // parallel inits cannot get more attempts than the bucket allows.
  auto has_capacity = [&] {
    auto [it, inserted] = buckets_.try_emplace(key, fresh_bucket(now));
    it->second = bucket_refill(it->second, now);
    return static_cast<std::size_t>(it->second.tokens) > pending_.outstanding(key);
  };
  {
    std::lock_guard lock(limiter_mutex_);
    if (!has_capacity()) throw Error(Errc::rate_limited, "too many attempts");
  }
  Issued issued = issue(user_id, secret, kind, mode, FsmState::rejected, 0, key, now);
  std::lock_guard lock(limiter_mutex_);
  if (!has_capacity()) throw Error(Errc::rate_limited, "too many attempts");
  ChallengeTicket ticket = std::move(issued.ticket);
  pending_.put(std::move(issued.login));
  return ticket;
}

bool AuthService::credentials_match(const PendingLogin& login, const std::vector<int>& blocks) {
  const auto record = users_.find(login.user_id);
  const CredentialRecord& rec = record ? *record : decoy_;
  bool equal = false;
  if (login.secret_kind == SecretKind::password) {
    const Digest d = salted_hash(rec.salt, login.secret.view());
    equal = digest_equal(d, rec.salted_hash);
  } else {
    std::string recovered = recover_hash(std::get<DatagramChallenge>(login.challenge), blocks);
    const Digest d = salted_hash(rec.salt, recovered);
    secure_wipe(recovered);
    equal = digest_equal(d, rec.salted_client_hash);
  }
  return equal && record.has_value();
}

LoginResult AuthService::login_verify(std::string_view challenge_id, std::span<const Point> clicks) {
  const TimePoint now = options_.clock();
  pending_.purge(now);
  PendingLogin login = pending_.take(challenge_id, now);

  Outcome outcome = Outcome::fail;
  std::vector<int> blocks;
  try {
    const SelectionResponse selection = resolve_selection(login.region_map, clicks, login.mode());
    if (const auto* ch = std::get_if<CharacterChallenge>(&login.challenge)) {
      outcome = classify_character_response(*ch, selection.slots);
    } else {
      const auto& dg = std::get<DatagramChallenge>(login.challenge);
      blocks = selection.blocks;
      if (blocks.size() == dg.segments.size()) outcome = classify_datagram_response(dg, blocks);
    }
  } catch (const Error&) {
    outcome = Outcome::fail;  // stray or repeated clicks
  }
  ++outcomes_[index_of(outcome)];

  // Credentials are only looked at once the CAPTCHA is fully solved.
  Outcome effective = outcome;
  if (outcome == Outcome::full) {
    ++comparisons_;
    ++comparisons_by_outcome_[index_of(outcome)];
    if (!credentials_match(login, blocks)) effective = Outcome::fail;
  }

  SessionRecord session{login.user_id, login.state, login.challenge_id, login.attempts, {}};
  LoginResult result;
  std::lock_guard lock(limiter_mutex_);
  auto [bucket, inserted] = buckets_.try_emplace(login.bucket_key, fresh_bucket(now));
  session.bucket = bucket->second;
  Decision decision = Decision::rejected;
  try {
    decision = session_decision(session, login.challenge_id, effective, now);
  } catch (const Error& e) {
    if (e.code() != Errc::bucket_empty) throw;
  }
  bucket->second = session.bucket;

  switch (decision) {
    case Decision::accepted:
      result.status = LoginStatus::accepted;
      result.token = to_hex(random_bytes(32));
      break;
    case Decision::rechallenge: {
      // Fresh SP from the same in-memory secret; no token is charged.
      Issued next = issue(login.user_id, login.secret.view(), login.secret_kind, login.mode(),
                          session.state, session.attempts, login.bucket_key, now);
      result.status = LoginStatus::pending_rechallenge;
      result.next = std::move(next.ticket);
      pending_.put(std::move(next.login));
      break;
    }
    case Decision::rejected:
      result.status = LoginStatus::rejected;
      break;
  }
  return result;
}

ServiceCounters AuthService::counters() const {
  ServiceCounters c;
  c.challenges_issued = challenges_issued_.load();
  c.credential_comparisons = comparisons_.load();
  for (std::size_t i = 0; i < 3; ++i) {
    c.comparisons_by_outcome[i] = comparisons_by_outcome_[i].load();
    c.outcomes[i] = outcomes_[i].load();
  }
  return c;
}

std::optional<ChallengeView> AuthService::visible_challenge(std::string_view challenge_id) const {
  std::optional<ChallengeView> view;
  pending_.inspect(challenge_id, [&](const PendingLogin& login) {
    view = view_of(login.challenge, login.region_map);
  });
  return view;
}

}  // namespace picap
