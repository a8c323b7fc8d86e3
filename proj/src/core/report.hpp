#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "core/attack_sim.hpp"

namespace picap {

struct ReportRow {
  std::string scenario;
  AttackerModel model;
  Mode mode = Mode::character;
  ChallengeConfig config;
  unsigned budget = 1;
  bool pending_retry = false;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;

  double analytic = 0.0;
  double enumerated = 0.0;
  bool enumeration_exact = false;  // enumerated rational == analytic rational
  SuccessStats simulated;
  WilsonInterval interval;
  std::optional<double> threshold;
  bool threshold_enforced = false;

  bool agreement() const { return enumeration_exact && interval.contains(analytic); }
  bool meets_threshold() const { return !threshold || analytic <= *threshold; }
  bool passed() const { return agreement() && (!threshold_enforced || meets_threshold()); }
};

struct ReportOptions {
  ChallengeConfig config;
  std::uint64_t trials = 1'000'000;
  std::uint64_t seed = 20240901;
  unsigned threads = 0;
  double session_threshold = 0.006;
};

/// Runs the standard scenarios: per-response rates for each guesser and mode,
/// then whole sessions with the pending follow-up under the token budget.
std::vector<ReportRow> build_report(const ReportOptions& options);

void write_csv(std::ostream& out, const std::vector<ReportRow>& rows);
void write_table(std::ostream& out, const std::vector<ReportRow>& rows);
bool report_passed(const std::vector<ReportRow>& rows);

}  // namespace picap
