#include "core/attack_sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <thread>

#include "core/crypto.hpp"
#include "core/error.hpp"
#include "core/service_config.hpp"

namespace picap {

namespace {

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t out = 1;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

std::int64_t factorial(int n) {
  std::int64_t out = 1;
  for (int i = 2; i <= n; ++i) out *= i;
  return out;
}

unsigned thread_count(unsigned requested, std::uint64_t work) {
  unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::uint64_t>(n, std::max<std::uint64_t>(work, 1)));
}

// Splits [0, total) into contiguous ranges, one per thread.
template <class Fn>
void parallel_ranges(std::uint64_t total, unsigned threads, Fn&& fn) {
  if (threads <= 1) {
    fn(0u, std::uint64_t{0}, total);
    return;
  }
  std::vector<std::thread> pool;
  const std::uint64_t chunk = (total + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::uint64_t begin = std::min(total, t * chunk);
    const std::uint64_t end = std::min(total, begin + chunk);
    pool.emplace_back([&fn, t, begin, end] { fn(t, begin, end); });
  }
  for (auto& th : pool) th.join();
}

// Fixed challenge used for exhaustive enumeration; placement of the SP glyphs
// does not matter for uniform guessing.
CharacterChallenge reference_character_challenge(const ChallengeConfig& config) {
  if (static_cast<int>(config.alphabet.size()) < config.sp_count + config.gp_count) {
    throw Error(Errc::invalid_config, "alphabet too small for the configured counts");
  }
  Rng rng(0);
  return build_character_challenge("enumeration", config.alphabet.substr(0, config.sp_count), config, rng);
}

DatagramChallenge reference_datagram_challenge(const ChallengeConfig& config) {
  const int n = config.segment_count;
  if (n > 10) throw Error(Errc::too_large, "ordering enumeration is limited to 10 blocks");
  // Distinct single-character segments so Full is decided by order alone.
  DatagramChallenge dg;
  for (int i = 0; i < n; ++i) dg.segments.emplace_back(1, static_cast<char>('a' + i));
  dg.display_permutation.resize(n);
  std::iota(dg.display_permutation.rbegin(), dg.display_permutation.rend(), 0);
  dg.adjacent_slight = config.datagram_adjacent_slight;
  return dg;
}

void tally(OutcomeMeasure& counts, Outcome o) {
  switch (o) {
    case Outcome::full: counts.full += 1; break;
    case Outcome::slight: counts.slight += 1; break;
    case Outcome::fail: counts.fail += 1; break;
  }
}

OutcomeMeasure normalise(OutcomeMeasure counts, std::int64_t total) {
  counts.full /= total;
  counts.slight /= total;
  counts.fail /= total;
  return counts;
}

std::vector<Point> centers_of(const ChallengeView& view, const std::vector<int>& ids) {
  std::vector<Point> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(view.centers[id]);
  return out;
}

std::vector<int> random_ordering(std::size_t n, Rng& rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  return order;
}

// k distinct ids from `pool`, uniformly.
std::vector<int> pick(std::vector<int> pool, std::size_t k, Rng& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  pool.resize(k);
  return pool;
}

// Display positions whose labels concatenate to `hash`, found by search.
bool order_for_hash(const ChallengeView& view, std::string_view hash, std::vector<int>& order,
                    std::vector<bool>& used) {
  if (hash.empty()) return order.size() == view.labels.size();
  for (std::size_t i = 0; i < view.labels.size(); ++i) {
    if (used[i] || !hash.starts_with(view.labels[i])) continue;
    used[i] = true;
    order.push_back(static_cast<int>(i));
    if (order_for_hash(view, hash.substr(view.labels[i].size()), order, used)) return true;
    order.pop_back();
    used[i] = false;
  }
  return false;
}

std::vector<int> legit_character_choice(const AttackerModel& model, const ChallengeView& view,
                                        std::string_view secret, Rng& rng) {
  std::vector<int> sp;
  std::vector<int> others;
  for (std::size_t i = 0; i < view.labels.size(); ++i) {
    const bool in_secret = secret.find(view.labels[i][0]) != std::string_view::npos;
    (in_secret ? sp : others).push_back(static_cast<int>(i));
  }
  const double u = rng.uniform();
  if (u < model.alpha) return sp;
  if (u < model.alpha + model.beta && !sp.empty()) {
    sp.erase(sp.begin() + static_cast<std::ptrdiff_t>(rng.below(sp.size())));
    return sp;
  }
  if (!others.empty()) sp.push_back(others[rng.below(others.size())]);
  return sp;
}

std::vector<int> legit_datagram_choice(const AttackerModel& model, const ChallengeView& view,
                                       std::string_view secret, Rng& rng) {
  std::vector<int> order;
  std::vector<bool> used(view.labels.size(), false);
  if (!order_for_hash(view, secret, order, used)) return random_ordering(view.labels.size(), rng);
  const double u = rng.uniform();
  if (u < model.alpha || order.size() < 2) return order;
  if (u < model.alpha + model.beta) {
    const auto i = rng.below(order.size() - 1);
    std::swap(order[i], order[i + 1]);
    return order;
  }
  std::rotate(order.begin(), order.begin() + 1, order.end());
  return order;
}

}  // namespace

const char* to_string(AttackerKind kind) noexcept {
  switch (kind) {
    case AttackerKind::blind_guess: return "blind";
    case AttackerKind::count_aware_guess: return "count";
    case AttackerKind::typer_oracle: return "typer";
    case AttackerKind::legit_user: return "legit";
  }
  return "blind";
}

AttackerKind parse_attacker(std::string_view text) {
  if (text == "blind") return AttackerKind::blind_guess;
  if (text == "count") return AttackerKind::count_aware_guess;
  if (text == "typer") return AttackerKind::typer_oracle;
  if (text == "legit") return AttackerKind::legit_user;
  throw Error(Errc::invalid_argument, "unknown attacker model: " + std::string(text));
}

OutcomeMeasure analytic_outcome_measure(const AttackerModel& model, Mode mode,
                                        const ChallengeConfig& config) {
  if (model.kind == AttackerKind::legit_user) {
    throw Error(Errc::unsupported_model, "legit users are described by fsm_distribution");
  }
  OutcomeMeasure m;
  if (mode == Mode::datagram) {
    const int n = config.segment_count;
    if (n > 20) throw Error(Errc::too_large, "too many segments for exact arithmetic");
    const std::int64_t orderings = factorial(n);
    m.full = Probability(1, orderings);
    // Adjacent transpositions of the solution: n - 1 of them.
    m.slight = config.datagram_adjacent_slight ? Probability(n - 1, orderings) : Probability(0);
  } else {
    const int k = config.sp_count;
    const int total = k + config.gp_count;
    if (total > 62) throw Error(Errc::too_large, "too many slots for exact arithmetic");
    if (model.kind == AttackerKind::blind_guess) {
      const std::int64_t subsets = std::int64_t{1} << total;
      m.full = Probability(1, subsets);
      m.slight = config.slight_enabled() ? Probability(binomial(k, k - 1), subsets) : Probability(0);
    } else {
      // A k-subset never has exactly k-1 SP glyphs and no GP glyph.
      m.full = Probability(1, binomial(total, k));
      m.slight = Probability(0);
    }
  }
  m.fail = Probability(1) - m.full - m.slight;
  return m;
}

Probability analytic_guess_rate(const AttackerModel& model, Mode mode, const ChallengeConfig& config) {
  return analytic_outcome_measure(model, mode, config).full;
}

OutcomeMeasure enumerate_outcome_measure(const ChallengeConfig& config) {
  return enumerate_outcome_measure(AttackerModel{}, Mode::character, config);
}

OutcomeMeasure enumerate_outcome_measure(const AttackerModel& model, Mode mode,
                                         const ChallengeConfig& config) {
  if (model.kind == AttackerKind::legit_user) {
    throw Error(Errc::unsupported_model, "legit users are described by fsm_distribution");
  }
  OutcomeMeasure counts;
  counts.fail = 0;
  if (mode == Mode::datagram) {
    const DatagramChallenge dg = reference_datagram_challenge(config);
    std::vector<int> order(dg.segments.size());
    std::iota(order.begin(), order.end(), 0);
    std::int64_t total = 0;
    do {
      tally(counts, classify_datagram_response(dg, order));
      ++total;
    } while (std::next_permutation(order.begin(), order.end()));
    return normalise(counts, total);
  }

  const int slots = config.sp_count + config.gp_count;
  if (slots > 20) throw Error(Errc::too_large, "subset enumeration is limited to 20 slots");
  const CharacterChallenge ch = reference_character_challenge(config);
  const bool all_subsets = model.kind == AttackerKind::blind_guess;
  std::int64_t total = 0;
  for (std::uint32_t mask = 0; mask < (1u << slots); ++mask) {
    if (!all_subsets && std::popcount(mask) != config.sp_count) continue;
    std::set<int> selection;
    for (int i = 0; i < slots; ++i) {
      if (mask & (1u << i)) selection.insert(i);
    }
    tally(counts, classify_character_response(ch, selection));
    ++total;
  }
  return normalise(counts, total);
}

Probability session_acceptance(const OutcomeMeasure& measure, unsigned budget, bool pending_retry) {
  const Probability attempt = pending_retry ? measure.full + measure.slight * measure.full : measure.full;
  Probability miss(1);
  for (unsigned i = 0; i < budget; ++i) miss *= Probability(1) - attempt;
  return Probability(1) - miss;
}

double session_acceptance(double full, double slight, unsigned budget, bool pending_retry) {
  const double attempt = pending_retry ? full + slight * full : full;
  return 1.0 - std::pow(1.0 - attempt, static_cast<double>(budget));
}

WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::string random_password(const ChallengeConfig& config, Rng& rng) {
  const auto& alphabet = config.alphabet;
  if (alphabet.size() < static_cast<std::size_t>(config.sp_count + config.gp_count)) {
    throw Error(Errc::invalid_config, "alphabet too small for the configured counts");
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const std::size_t len = 8 + rng.below(5);
    std::string pw;
    for (std::size_t i = 0; i < len; ++i) pw.push_back(alphabet[rng.below(alphabet.size())]);
    const auto distinct = distinct_glyphs(pw).size();
    if (distinct >= static_cast<std::size_t>(config.sp_count) &&
        alphabet.size() - distinct >= static_cast<std::size_t>(config.gp_count)) {
      return pw;
    }
  }
  throw Error(Errc::invalid_config, "cannot draw a usable password from this alphabet");
}

std::vector<Point> attacker_clicks(const AttackerModel& model, const ChallengeView& view,
                                   const ChallengeConfig& public_config,
                                   std::optional<std::string_view> secret, Rng& rng) {
  const std::size_t n = view.labels.size();
  if (model.kind == AttackerKind::legit_user) {
    if (!secret) throw Error(Errc::invalid_argument, "legit user needs the secret");
    return centers_of(view, view.mode == Mode::character ? legit_character_choice(model, view, *secret, rng)
                                                         : legit_datagram_choice(model, view, *secret, rng));
  }
  if (view.mode == Mode::datagram) {
    // Segments of a hash carry no ordering information without the hash.
    return centers_of(view, random_ordering(n, rng));
  }

  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  const auto k = static_cast<std::size_t>(std::max(0, static_cast<int>(n) - public_config.gp_count));
  switch (model.kind) {
    case AttackerKind::blind_guess: {
      std::vector<int> chosen;
      for (int id : all) {
        if (rng.next() & 1) chosen.push_back(id);
      }
      return centers_of(view, chosen);
    }
    case AttackerKind::count_aware_guess:
      return centers_of(view, pick(all, k, rng));
    case AttackerKind::typer_oracle: {
      // Anything outside the public distractor alphabet must be a secret
      // glyph; the rest is a uniform guess.
      std::vector<int> certain;
      std::vector<int> unsure;
      for (int id : all) {
        const bool drawable = public_config.alphabet.find(view.labels[id][0]) != std::string::npos;
        (drawable ? unsure : certain).push_back(id);
      }
      const std::size_t remaining = k > certain.size() ? k - certain.size() : 0;
      auto rest = pick(unsure, remaining, rng);
      certain.insert(certain.end(), rest.begin(), rest.end());
      return centers_of(view, certain);
    }
    case AttackerKind::legit_user: break;
  }
  return {};
}

SuccessStats simulate_attacker(const SimulationParams& params) {
  const ChallengeConfig& config = params.config;
  config.validate();
  if (params.model.kind == AttackerKind::legit_user) {
    check_simplex(params.model.alpha, params.model.beta, params.model.gamma);
  }
  ServiceConfig layout_config;
  layout_config.challenge = config;
  const int labels = params.mode == Mode::character ? config.sp_count + config.gp_count : config.segment_count;
  const RegionMap regions = layout_regions(labels, layout_config.style_for(params.mode, labels));
  const bool legit = params.model.kind == AttackerKind::legit_user;

  auto run_session = [&](Rng& rng) {
    const std::string password = random_password(config, rng);
    const std::string hash = params.mode == Mode::datagram ? client_hash(password) : std::string();
    const std::string_view secret = params.mode == Mode::datagram ? std::string_view(hash) : password;
    for (unsigned attempt = 0; attempt < params.budget; ++attempt) {
      FsmState state = FsmState::rejected;
      while (true) {
        AnyChallenge challenge;
        if (params.mode == Mode::character) {
          challenge = build_character_challenge("sim", password, config, rng);
        } else {
          challenge = build_datagram_challenge("sim", hash, config, rng);
        }
        const ChallengeView view = view_of(challenge, regions);
        const auto clicks = attacker_clicks(params.model, view, config,
                                            legit ? std::optional(secret) : std::nullopt, rng);
        const SelectionResponse sel = resolve_selection(regions, clicks, params.mode);
        Outcome outcome = Outcome::fail;
        if (const auto* ch = std::get_if<CharacterChallenge>(&challenge)) {
          outcome = classify_character_response(*ch, sel.slots);
        } else if (sel.blocks.size() == static_cast<std::size_t>(config.segment_count)) {
          outcome = classify_datagram_response(std::get<DatagramChallenge>(challenge), sel.blocks);
        }
        state = fsm_step(state, outcome);
        if (state == FsmState::successful) return true;
        if (state == FsmState::pending && params.pending_retry) continue;
        break;
      }
    }
    return false;
  };

  const unsigned threads = thread_count(params.threads, params.trials);
  std::vector<std::uint64_t> wins(threads, 0);
  parallel_ranges(params.trials, threads, [&](unsigned t, std::uint64_t begin, std::uint64_t end) {
    std::uint64_t local = 0;
    for (std::uint64_t i = begin; i < end; ++i) {
      Rng rng(mix_seed(params.seed, i));
      if (run_session(rng)) ++local;
    }
    wins[t] = local;
  });
  return SuccessStats{params.trials, std::accumulate(wins.begin(), wins.end(), std::uint64_t{0})};
}

std::vector<StateDistribution> simulate_fsm(double alpha, double beta, double gamma, unsigned rounds,
                                            std::uint64_t trials, std::uint64_t seed, unsigned threads) {
  check_simplex(alpha, beta, gamma);
  if (trials == 0) throw Error(Errc::invalid_argument, "trials must be >= 1");
  const unsigned workers = thread_count(threads, trials);
  // counts[worker][round][state]
  std::vector<std::vector<std::array<std::uint64_t, 3>>> counts(
      workers, std::vector<std::array<std::uint64_t, 3>>(rounds + 1, {0, 0, 0}));
  parallel_ranges(trials, workers, [&](unsigned t, std::uint64_t begin, std::uint64_t end) {
    auto& local = counts[t];
    for (std::uint64_t i = begin; i < end; ++i) {
      Rng rng(mix_seed(seed, i));
      FsmState state = FsmState::rejected;
      ++local[0][static_cast<int>(state)];
      for (unsigned n = 1; n <= rounds; ++n) {
        const double u = rng.uniform();
        const Outcome o = u < alpha ? Outcome::full : (u < alpha + beta ? Outcome::slight : Outcome::fail);
        state = fsm_round(state, o);
        ++local[n][static_cast<int>(state)];
      }
    }
  });

  std::vector<StateDistribution> out(rounds + 1);
  const double total = static_cast<double>(trials);
  for (unsigned n = 0; n <= rounds; ++n) {
    std::array<std::uint64_t, 3> sum{0, 0, 0};
    for (const auto& local : counts) {
      for (int s = 0; s < 3; ++s) sum[s] += local[n][s];
    }
    out[n].r = sum[static_cast<int>(FsmState::rejected)] / total;
    out[n].p = sum[static_cast<int>(FsmState::pending)] / total;
    out[n].s = sum[static_cast<int>(FsmState::successful)] / total;
    out[n].n = n;
  }
  return out;
}

}  // namespace picap
