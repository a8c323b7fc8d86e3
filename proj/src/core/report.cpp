#include "core/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace picap {

namespace {

ReportRow make_row(std::string scenario, AttackerKind kind, Mode mode, unsigned budget, bool retry,
                   const ReportOptions& opts, std::uint64_t seed_offset) {
  ReportRow row;
  row.scenario = std::move(scenario);
  row.model.kind = kind;
  row.mode = mode;
  row.config = opts.config;
  row.budget = budget;
  row.pending_retry = retry;
  row.trials = opts.trials;
  row.seed = mix_seed(opts.seed, seed_offset);

  const OutcomeMeasure analytic = analytic_outcome_measure(row.model, mode, row.config);
  const OutcomeMeasure enumerated = enumerate_outcome_measure(row.model, mode, row.config);
  const Probability a = session_acceptance(analytic, budget, retry);
  const Probability e = session_acceptance(enumerated, budget, retry);
  row.analytic = to_double(a);
  row.enumerated = to_double(e);
  row.enumeration_exact = a == e && analytic.slight == enumerated.slight;

  SimulationParams sim;
  sim.model = row.model;
  sim.mode = mode;
  sim.config = row.config;
  sim.trials = row.trials;
  sim.seed = row.seed;
  sim.budget = budget;
  sim.pending_retry = retry;
  sim.threads = opts.threads;
  row.simulated = simulate_attacker(sim);
  row.interval = row.simulated.wilson95();
  return row;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::vector<ReportRow> build_report(const ReportOptions& opts) {
  std::vector<ReportRow> rows;
  std::uint64_t offset = 0;
  rows.push_back(make_row("single_response", AttackerKind::blind_guess, Mode::character, 1, false, opts, ++offset));
  rows.push_back(make_row("single_response", AttackerKind::count_aware_guess, Mode::character, 1, false, opts, ++offset));
  rows.push_back(make_row("single_response", AttackerKind::typer_oracle, Mode::character, 1, false, opts, ++offset));
  rows.push_back(make_row("single_response", AttackerKind::blind_guess, Mode::datagram, 1, false, opts, ++offset));

  const unsigned budget = 1;
  auto session = [&](AttackerKind kind, Mode mode, bool enforced) {
    ReportRow row = make_row("session", kind, mode, budget, true, opts, ++offset);
    row.threshold = opts.session_threshold;
    row.threshold_enforced = enforced;
    rows.push_back(std::move(row));
  };
  session(AttackerKind::blind_guess, Mode::character, true);
  session(AttackerKind::count_aware_guess, Mode::character, false);
  session(AttackerKind::typer_oracle, Mode::character, false);
  session(AttackerKind::blind_guess, Mode::datagram, true);
  return rows;
}

void write_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "scenario,model,mode,k,m,segments,budget,pending_retry,trials,seed,analytic,enumerated,"
         "simulated,wilson_lo,wilson_hi,abs_delta,agreement,threshold,meets_threshold,threshold_enforced\n";
  for (const auto& r : rows) {
    out << r.scenario << ',' << to_string(r.model.kind) << ',' << to_string(r.mode) << ','
        << r.config.sp_count << ',' << r.config.gp_count << ',' << r.config.segment_count << ','
        << r.budget << ',' << (r.pending_retry ? 1 : 0) << ',' << r.trials << ',' << r.seed << ','
        << fmt(r.analytic) << ',' << fmt(r.enumerated) << ',' << fmt(r.simulated.rate()) << ','
        << fmt(r.interval.lo) << ',' << fmt(r.interval.hi) << ','
        << fmt(std::abs(r.simulated.rate() - r.analytic)) << ',' << (r.agreement() ? 1 : 0) << ','
        << (r.threshold ? fmt(*r.threshold) : std::string()) << ',' << (r.meets_threshold() ? 1 : 0)
        << ',' << (r.threshold_enforced ? 1 : 0) << '\n';
  }
}

void write_table(std::ostream& out, const std::vector<ReportRow>& rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %-6s %-9s %12s %12s %25s %s\n", "scenario", "model", "mode",
                "analytic", "simulated", "wilson95", "status");
  out << line;
  for (const auto& r : rows) {
    std::string status = r.agreement() ? "agree" : "DISAGREE";
    if (r.threshold && !r.meets_threshold()) status += r.threshold_enforced ? " OVER-THRESHOLD" : " over-threshold(flag)";
    std::snprintf(line, sizeof line, "%-16s %-6s %-9s %12.6g %12.6g  [%10.6g, %10.6g] %s\n",
                  r.scenario.c_str(), to_string(r.model.kind), to_string(r.mode), r.analytic,
                  r.simulated.rate(), r.interval.lo, r.interval.hi, status.c_str());
    out << line;
  }
}

bool report_passed(const std::vector<ReportRow>& rows) {
  for (const auto& r : rows) {
    if (!r.passed()) return false;
  }
  return true;
}

}  // namespace picap
