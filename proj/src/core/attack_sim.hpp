#pragma once

// Attacker models and the three independent estimates of their success:
// closed form, exhaustive enumeration through the real classifier, and Monte
// Carlo runs of complete sessions (challenge -> clicks -> FSM).

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

#include "core/captcha.hpp"
#include "core/fsm.hpp"
#include "core/render.hpp"

namespace picap {

enum class AttackerKind {
  blind_guess,        // uniform over every click subset / ordering
  count_aware_guess,  // knows |SP|, uniform over k-subsets
  typer_oracle,       // reads every glyph perfectly, never sees the secret
  legit_user,         // knows the secret; solves/slips/fails with alpha/beta/gamma
};

const char* to_string(AttackerKind kind) noexcept;
AttackerKind parse_attacker(std::string_view text);

struct AttackerModel {
  AttackerKind kind = AttackerKind::blind_guess;
  double alpha = 1.0;
  double beta = 0.0;
  double gamma = 0.0;
};

using Probability = boost::rational<std::int64_t>;

inline double to_double(const Probability& p) { return boost::rational_cast<double>(p); }

struct OutcomeMeasure {
  Probability full{0};
  Probability slight{0};
  Probability fail{1};
};

/// Closed-form outcome probabilities of one guessed response.
/// Throws unsupported_model for legit_user.
OutcomeMeasure analytic_outcome_measure(const AttackerModel& model, Mode mode,
                                        const ChallengeConfig& config);

/// Probability that a single guessed response is Full.
Probability analytic_guess_rate(const AttackerModel& model, Mode mode, const ChallengeConfig& config);

/// Exact measure by running the classifier over every subset of the k+m
/// display slots (uniform guess). Throws too_large beyond 20 slots.
OutcomeMeasure enumerate_outcome_measure(const ChallengeConfig& config);

/// Same, for a given attacker: blind guesses range over all subsets,
/// count-aware and typer guesses over the k-subsets; datagram mode ranges
/// over every ordering of the blocks (at most 10).
OutcomeMeasure enumerate_outcome_measure(const AttackerModel& model, Mode mode,
                                         const ChallengeConfig& config);

/// Acceptance within `budget` login attempts. With pending_retry a slight
/// mistake earns one free follow-up challenge that must be Full.
Probability session_acceptance(const OutcomeMeasure& measure, unsigned budget, bool pending_retry);
double session_acceptance(double full, double slight, unsigned budget, bool pending_retry);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double p) const noexcept { return p >= lo && p <= hi; }
};

WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                               double z = 1.959963984540054);

struct SuccessStats {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;

  double rate() const noexcept {
    return trials == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(trials);
  }
  WilsonInterval wilson95() const { return wilson_interval(successes, trials); }

  bool operator==(const SuccessStats&) const = default;
};

struct SimulationParams {
  AttackerModel model;
  Mode mode = Mode::character;
  ChallengeConfig config;
  std::uint64_t trials = 1'000'000;
  std::uint64_t seed = 1;
  unsigned budget = 1;
  bool pending_retry = true;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Clicks an attacker submits for a challenge it can see. Only legit_user is
/// handed the secret; the other strategies never receive it.
std::vector<Point> attacker_clicks(const AttackerModel& model, const ChallengeView& view,
                                   const ChallengeConfig& public_config,
                                   std::optional<std::string_view> secret, Rng& rng);

/// Runs `trials` independent sessions, each with a fresh random victim
/// password, until acceptance or `budget` attempts. Reproducible per seed and
/// independent of the thread count.
SuccessStats simulate_attacker(const SimulationParams& params);

/// Empirical state frequencies per round (index 0..rounds) over independent
/// chains driven by fsm_round.
std::vector<StateDistribution> simulate_fsm(double alpha, double beta, double gamma, unsigned rounds,
                                            std::uint64_t trials, std::uint64_t seed,
                                            unsigned threads = 0);

/// Random password over the config alphabet with at least sp_count distinct
/// glyphs.
std::string random_password(const ChallengeConfig& config, Rng& rng);

}  // namespace picap
