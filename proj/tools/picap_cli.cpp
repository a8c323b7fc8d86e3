// Command-line front end. Talks to the library only through picap.h.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <pthread.h>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "picap/picap.h"

namespace {

int report_failure(picap_status st, const char* what) {
  std::fprintf(stderr, "%s: %s (%s)\n", what, picap_last_error(), picap_status_string(st));
  return st == PICAP_E_INVALID_ARGUMENT || st == PICAP_E_INVALID_CONFIG ? 2 : 1;
}

struct ConfigHandle {
  picap_config* ptr = nullptr;
  ~ConfigHandle() { picap_config_destroy(ptr); }
};

picap_status open_config(const std::string& path, ConfigHandle& out) {
  return path.empty() ? picap_config_create(&out.ptr) : picap_config_load(path.c_str(), &out.ptr);
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

struct ServeArgs {
  int port = 8080;
  std::string data_dir = "./data";
  std::string host = "127.0.0.1";
  bool allow_external = false;
  std::string config;
  std::string static_dir;
};

int cmd_serve(ServeArgs args) {
  if (auto p = env("PORT")) {
    try {
      args.port = std::stoi(*p);
    } catch (const std::exception&) {
      std::fprintf(stderr, "PORT is not a number: %s\n", p->c_str());
      return 2;
    }
  }
  if (auto d = env("DATA_DIR")) args.data_dir = *d;

  ConfigHandle cfg;
  if (auto st = open_config(args.config, cfg)) return report_failure(st, "config");
  picap_service* svc = nullptr;
  if (auto st = picap_service_open(args.data_dir.c_str(), cfg.ptr, &svc)) return report_failure(st, "service");

  picap_server_options opts{args.host.c_str(), args.port, args.allow_external ? 1 : 0,
                            args.static_dir.empty() ? nullptr : args.static_dir.c_str()};
  picap_server* srv = nullptr;
  if (auto st = picap_server_create(svc, &opts, &srv)) {
    picap_service_close(svc);
    return report_failure(st, "server");
  }
  int bound = 0;
  if (auto st = picap_server_bind(srv, &bound)) {
    picap_server_destroy(srv);
    picap_service_close(svc);
    return report_failure(st, "bind");
  }

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::printf("listening on http://%s:%d (data dir %s)\n", args.host.c_str(), bound, args.data_dir.c_str());
  std::fflush(stdout);
  picap_status run_status = PICAP_OK;
  std::thread worker([&] { run_status = picap_server_run(srv); });
  int sig = 0;
  sigwait(&signals, &sig);
  picap_server_stop(srv);
  worker.join();
  picap_server_destroy(srv);
  picap_service_close(svc);
  if (run_status != PICAP_OK) return report_failure(run_status, "serve");
  return 0;
}

struct SimulateArgs {
  std::string model = "blind";
  std::string mode = "character";
  uint64_t trials = 1000000;
  uint64_t seed = 1;
  unsigned budget = 1;
  int k = 0, m = 0, segments = 0;
  bool no_retry = false;
  double alpha = 1.0, beta = 0.0, gamma = 0.0;
  unsigned threads = 0;
  std::string config;
};

int cmd_simulate(const SimulateArgs& a) {
  static const std::map<std::string, picap_attacker> models{{"blind", PICAP_ATTACKER_BLIND},
                                                            {"count", PICAP_ATTACKER_COUNT_AWARE},
                                                            {"typer", PICAP_ATTACKER_TYPER},
                                                            {"legit", PICAP_ATTACKER_LEGIT}};
  ConfigHandle cfg;
  if (auto st = open_config(a.config, cfg)) return report_failure(st, "config");
  picap_sim_params p;
  picap_sim_params_init(&p);
  p.attacker = models.at(a.model);
  p.mode = a.mode == "datagram" ? PICAP_MODE_DATAGRAM : PICAP_MODE_CHARACTER;
  p.alpha = a.alpha;
  p.beta = a.beta;
  p.gamma = a.gamma;
  p.sp_count = a.k;
  p.gp_count = a.m;
  p.segment_count = a.segments;
  p.trials = a.trials;
  p.seed = a.seed;
  p.budget = a.budget;
  p.pending_retry = a.no_retry ? 0 : 1;
  p.threads = a.threads;
  picap_sim_result r;
  if (auto st = picap_simulate(cfg.ptr, &p, &r)) return report_failure(st, "simulate");
  std::printf("model,mode,trials,successes,rate,wilson_lo,wilson_hi,analytic\n");
  std::printf("%s,%s,%llu,%llu,%.9g,%.9g,%.9g,", a.model.c_str(), a.mode.c_str(),
              static_cast<unsigned long long>(r.trials), static_cast<unsigned long long>(r.successes), r.rate,
              r.wilson_lo, r.wilson_hi);
  if (r.has_analytic) std::printf("%.9g", r.analytic);
  std::printf("\n");
  return 0;
}

struct FsmArgs {
  double alpha = 0.8, beta = 0.15, gamma = 0.05;
  unsigned rounds = 10;
  uint64_t trials = 0;
  uint64_t seed = 1;
  unsigned threads = 0;
};

int cmd_fsm(const FsmArgs& a) {
  std::vector<picap_fsm_state> sim;
  if (a.trials > 0) {
    sim.resize(a.rounds + 1);
    if (auto st = picap_fsm_simulate(a.alpha, a.beta, a.gamma, a.rounds, a.trials, a.seed, a.threads, sim.data())) {
      return report_failure(st, "fsm");
    }
    std::printf("n,s,p,r,sim_s,sim_p,sim_r\n");
  } else {
    std::printf("n,s,p,r\n");
  }
  for (unsigned n = 0; n <= a.rounds; ++n) {
    picap_fsm_state d;
    if (auto st = picap_fsm_distribution(a.alpha, a.beta, a.gamma, n, &d)) return report_failure(st, "fsm");
    std::printf("%u,%.12g,%.12g,%.12g", n, d.s, d.p, d.r);
    if (!sim.empty()) std::printf(",%.9g,%.9g,%.9g", sim[n].s, sim[n].p, sim[n].r);
    std::printf("\n");
  }
  return 0;
}

struct ReportArgs {
  std::string out;
  uint64_t trials = 1000000;
  uint64_t seed = 20240901;
  unsigned threads = 0;
  std::string config;
};

int cmd_report(const ReportArgs& a) {
  ConfigHandle cfg;
  if (auto st = open_config(a.config, cfg)) return report_failure(st, "config");
  char* table = nullptr;
  int passed = 0;
  if (auto st = picap_report(cfg.ptr, a.trials, a.seed, a.threads, a.out.empty() ? nullptr : a.out.c_str(),
                             &table, &passed)) {
    return report_failure(st, "report");
  }
  std::fputs(table, stdout);
  picap_string_free(table);
  if (!passed) {
    std::fprintf(stderr, "report: tolerance or enforced threshold breached\n");
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"picap: credential-derived click CAPTCHA login service"};
  app.require_subcommand(1);

  ServeArgs serve;
  auto* s = app.add_subcommand("serve", "Run the HTTP service");
  s->add_option("--port", serve.port, "TCP port (env PORT overrides)")->check(CLI::Range(0, 65535));
  s->add_option("--data-dir", serve.data_dir, "Directory for the user database (env DATA_DIR overrides)");
  s->add_option("--host", serve.host, "Listen address");
  s->add_flag("--allow-external", serve.allow_external, "Permit a non-loopback listen address");
  s->add_option("--config", serve.config, "key=value configuration file")->check(CLI::ExistingFile);
  s->add_option("--static-dir", serve.static_dir, "Static files served at /")->check(CLI::ExistingDirectory);

  SimulateArgs sim;
  auto* sm = app.add_subcommand("simulate", "Monte Carlo attack simulation");
  sm->add_option("--model", sim.model)->check(CLI::IsMember({"blind", "count", "typer", "legit"}));
  sm->add_option("--mode", sim.mode)->check(CLI::IsMember({"character", "datagram"}));
  sm->add_option("--trials", sim.trials)->check(CLI::PositiveNumber);
  sm->add_option("--seed", sim.seed);
  sm->add_option("--budget", sim.budget, "Login attempts per session")->check(CLI::PositiveNumber);
  sm->add_option("--k", sim.k, "Secret glyphs per challenge")->check(CLI::PositiveNumber);
  sm->add_option("--m", sim.m, "Distractor glyphs per challenge")->check(CLI::PositiveNumber);
  sm->add_option("--segments", sim.segments, "Hash blocks per datagram challenge")->check(CLI::PositiveNumber);
  sm->add_flag("--no-retry", sim.no_retry, "Do not take the follow-up challenge after a slight mistake");
  sm->add_option("--alpha", sim.alpha, "legit: P(correct)");
  sm->add_option("--beta", sim.beta, "legit: P(slight mistake)");
  sm->add_option("--gamma", sim.gamma, "legit: P(failure)");
  sm->add_option("--threads", sim.threads);
  sm->add_option("--config", sim.config)->check(CLI::ExistingFile);

  FsmArgs fsm;
  auto* f = app.add_subcommand("fsm", "State distribution of the login state machine");
  f->add_option("--alpha", fsm.alpha);
  f->add_option("--beta", fsm.beta);
  f->add_option("--gamma", fsm.gamma);
  f->add_option("--rounds", fsm.rounds);
  f->add_option("--trials", fsm.trials, "Also simulate this many chains");
  f->add_option("--seed", fsm.seed);
  f->add_option("--threads", fsm.threads);

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Analytic / enumerated / simulated comparison");
  r->add_option("--out", rep.out, "CSV output path");
  r->add_option("--trials", rep.trials)->check(CLI::PositiveNumber);
  r->add_option("--seed", rep.seed);
  r->add_option("--threads", rep.threads);
  r->add_option("--config", rep.config)->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  if (s->parsed()) return cmd_serve(serve);
  if (sm->parsed()) return cmd_simulate(sim);
  if (f->parsed()) return cmd_fsm(fsm);
  return cmd_report(rep);
}
