#include "core/fsm.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace picap {

const char* to_string(FsmState state) noexcept {
  switch (state) {
    case FsmState::rejected: return "rejected";
    case FsmState::pending: return "pending";
    case FsmState::successful: return "successful";
  }
  return "rejected";
}

const char* to_string(Decision decision) noexcept {
  switch (decision) {
    case Decision::accepted: return "accepted";
    case Decision::rechallenge: return "rechallenge";
    case Decision::rejected: return "rejected";
  }
  return "rejected";
}

FsmState fsm_step(FsmState state, Outcome outcome) {
  if (state == FsmState::successful) {
    throw Error(Errc::terminal_state, "session already successful");
  }
  switch (outcome) {
    case Outcome::full: return FsmState::successful;
    case Outcome::slight:
      return state == FsmState::rejected ? FsmState::pending : FsmState::rejected;
    case Outcome::fail: return FsmState::rejected;
  }
  return FsmState::rejected;
}

FsmState fsm_round(FsmState state, Outcome outcome) {
  return fsm_step(state == FsmState::successful ? FsmState::rejected : state, outcome);
}

void check_simplex(double alpha, double beta, double gamma) {
  const bool finite = std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma);
  if (!finite || alpha < 0 || beta < 0 || gamma < 0 ||
      std::abs(alpha + beta + gamma - 1.0) > 1e-12) {
    throw Error(Errc::invalid_probabilities, "alpha, beta, gamma must be >= 0 and sum to 1");
  }
}

std::vector<StateDistribution> fsm_trajectory(double alpha, double beta, double gamma, unsigned n) {
  check_simplex(alpha, beta, gamma);
  std::vector<StateDistribution> out;
  out.reserve(n + 1);
  StateDistribution d;
  out.push_back(d);
  for (unsigned i = 1; i <= n; ++i) {
    const double total = d.s + d.p + d.r;
    StateDistribution next;
    next.s = alpha * total;
    next.p = beta * (d.s + d.r);
    next.r = beta * d.p + gamma * total;
    next.n = i;
    d = next;
    out.push_back(d);
  }
  return out;
}

StateDistribution fsm_distribution(double alpha, double beta, double gamma, unsigned n) {
  return fsm_trajectory(alpha, beta, gamma, n).back();
}

double cumulative_success(double alpha, double beta, double gamma, unsigned n) {
  check_simplex(alpha, beta, gamma);
  double done = 0.0;
  double p = 0.0;
  double r = 1.0;
  for (unsigned i = 0; i < n; ++i) {
    const double live = p + r;
    done += alpha * live;
    const double next_p = beta * r;
    r = beta * p + gamma * live;
    p = next_p;
  }
  return done;
}

TokenBucket bucket_refill(TokenBucket bucket, TimePoint now) {
  if (bucket.refill_interval.count() <= 0 || now <= bucket.last_refill) return bucket;
  const auto intervals = (now - bucket.last_refill) / bucket.refill_interval;
  if (intervals <= 0) return bucket;
  const long long added = static_cast<long long>(intervals) * bucket.refill_amount;
  bucket.tokens = static_cast<int>(std::min<long long>(bucket.capacity, bucket.tokens + added));
  bucket.last_refill += intervals * bucket.refill_interval;
  return bucket;
}

std::optional<TokenBucket> bucket_try_consume(TokenBucket bucket, TimePoint now) {
  bucket = bucket_refill(bucket, now);
  if (bucket.tokens < 1) return std::nullopt;
  --bucket.tokens;
  return bucket;
}

Decision session_decision(SessionRecord& record, std::string_view challenge_id, Outcome outcome,
                          TimePoint now) {
  if (!record.active_challenge_id || *record.active_challenge_id != challenge_id) {
    throw Error(Errc::no_active_challenge, "no active challenge with that id");
  }
  record.state = fsm_step(record.state, outcome);
  record.active_challenge_id.reset();
  ++record.attempts;
  switch (record.state) {
    case FsmState::successful: return Decision::accepted;
    case FsmState::pending: return Decision::rechallenge;
    case FsmState::rejected: break;
  }
  auto consumed = bucket_try_consume(record.bucket, now);
  if (!consumed) {
    record.bucket = bucket_refill(record.bucket, now);
    throw Error(Errc::bucket_empty, "rate limit reached");
  }
  record.bucket = *consumed;
  return Decision::rejected;
}

}  // namespace picap
