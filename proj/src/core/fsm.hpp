#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/captcha.hpp"

namespace picap {

enum class FsmState { rejected, pending, successful };

const char* to_string(FsmState state) noexcept;

/// One verification step within a login session. Full always succeeds, a
/// slight mistake moves rejected -> pending and pending -> rejected, anything
/// else rejects. Throws terminal_state when called on a successful session.
FsmState fsm_step(FsmState state, Outcome outcome);

/// Transition used by the round-by-round analysis: a session that already
/// succeeded is followed by a fresh login, which starts out rejected.
FsmState fsm_round(FsmState state, Outcome outcome);

struct StateDistribution {
  double s = 0.0;
  double p = 0.0;
  double r = 1.0;
  unsigned n = 0;
};

/// Distribution over (s, p, r) after n rounds of
///   s' = a (s + p + r),  p' = b (s + r),  r' = b p + g (s + p + r)
/// starting from r = 1. Throws invalid_probabilities unless (a, b, g) lies on
/// the probability simplex.
StateDistribution fsm_distribution(double alpha, double beta, double gamma, unsigned n);

/// Rounds 0..n of the same recurrence.
std::vector<StateDistribution> fsm_trajectory(double alpha, double beta, double gamma, unsigned n);

/// Probability that a chain started in rejected has reached successful at
/// least once within n rounds. Nondecreasing in n, tends to 1 when alpha > 0.
double cumulative_success(double alpha, double beta, double gamma, unsigned n);

void check_simplex(double alpha, double beta, double gamma);

struct TokenBucket {
  int capacity = 3;
  int tokens = 3;
  int refill_amount = 3;
  std::chrono::seconds refill_interval{6 * 3600};
  TimePoint last_refill{};
};

/// Applies the refills earned since last_refill, capped at capacity.
TokenBucket bucket_refill(TokenBucket bucket, TimePoint now);

/// Refills, then takes one token. nullopt means the attempt is refused.
std::optional<TokenBucket> bucket_try_consume(TokenBucket bucket, TimePoint now);

struct SessionRecord {
  std::string user_id;
  FsmState state = FsmState::rejected;
  std::optional<std::string> active_challenge_id;
  unsigned attempts = 0;
  TokenBucket bucket;
};

enum class Decision { accepted, rechallenge, rejected };

const char* to_string(Decision decision) noexcept;

/// Feeds a classified response into the session. Pending transitions are
/// free; rejected ones take a bucket token and throw bucket_empty when none is
/// left (the session is still left in the rejected state). The active
/// challenge is cleared; on rechallenge the caller installs the next one.
Decision session_decision(SessionRecord& record, std::string_view challenge_id, Outcome outcome,
                          TimePoint now);

}  // namespace picap
