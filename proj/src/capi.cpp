#include "picap/picap.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "core/attack_sim.hpp"
#include "core/crypto.hpp"
#include "core/error.hpp"
#include "core/http_server.hpp"
#include "core/report.hpp"
#include "core/service.hpp"

struct picap_config {
  picap::ServiceConfig value;
};

struct picap_service {
  std::unique_ptr<picap::AuthService> impl;
};

struct picap_ticket {
  picap::ChallengeTicket value;
};

struct picap_login_result {
  picap::LoginResult value;
  std::unique_ptr<picap_ticket> next;
};

struct picap_server {
  std::unique_ptr<picap::HttpServer> impl;
};

namespace {

static_assert(PICAP_E_IO == static_cast<int>(picap::Errc::io));
static_assert(PICAP_E_TOO_LARGE == static_cast<int>(picap::Errc::too_large));
static_assert(PICAP_E_RATE_LIMITED == static_cast<int>(picap::Errc::rate_limited));
static_assert(PICAP_E_INVALID_ARGUMENT == static_cast<int>(picap::Errc::invalid_argument));

thread_local std::string last_error;

picap_status fail(picap_status status, const char* what) {
  last_error = what;
  return status;
}

// Runs fn, translating exceptions into status codes.
template <class Fn>
picap_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    last_error.clear();
    return PICAP_OK;
  } catch (const picap::Error& e) {
    return fail(static_cast<picap_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(PICAP_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PICAP_E_INTERNAL, e.what());
  } catch (...) {
    return fail(PICAP_E_INTERNAL, "unknown error");
  }
}

#define PICAP_REQUIRE(cond)                                                  \
  do {                                                                       \
    if (!(cond)) return fail(PICAP_E_INVALID_ARGUMENT, "null argument: " #cond); \
  } while (0)

picap::Mode to_mode(picap_mode m) {
  switch (m) {
    case PICAP_MODE_CHARACTER: return picap::Mode::character;
    case PICAP_MODE_DATAGRAM: return picap::Mode::datagram;
  }
  throw picap::Error(picap::Errc::invalid_argument, "unknown mode");
}

picap::AttackerKind to_kind(picap_attacker a) {
  switch (a) {
    case PICAP_ATTACKER_BLIND: return picap::AttackerKind::blind_guess;
    case PICAP_ATTACKER_COUNT_AWARE: return picap::AttackerKind::count_aware_guess;
    case PICAP_ATTACKER_TYPER: return picap::AttackerKind::typer_oracle;
    case PICAP_ATTACKER_LEGIT: return picap::AttackerKind::legit_user;
  }
  throw picap::Error(picap::Errc::invalid_argument, "unknown attacker");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

picap_fsm_state to_c(const picap::StateDistribution& d) { return {d.s, d.p, d.r}; }

}  // namespace

extern "C" {

const char* picap_status_string(picap_status status) {
  if (status == PICAP_OK) return "ok";
  if (status == PICAP_E_INTERNAL) return "internal";
  if (status >= PICAP_E_INVALID_ARGUMENT && status <= PICAP_E_IO) {
    return picap::errc_name(static_cast<picap::Errc>(status));
  }
  return "unknown";
}

const char* picap_last_error(void) { return last_error.c_str(); }

void picap_string_free(char* s) { std::free(s); }

picap_status picap_config_create(picap_config** out) {
  PICAP_REQUIRE(out);
  return guarded([&] { *out = new picap_config{}; });
}

picap_status picap_config_load(const char* path, picap_config** out) {
  PICAP_REQUIRE(path && out);
  return guarded([&] { *out = new picap_config{picap::ServiceConfig::load(path)}; });
}

picap_status picap_config_set(picap_config* config, const char* key, const char* value) {
  PICAP_REQUIRE(config && key && value);
  return guarded([&] { config->value.set(key, value); });
}

void picap_config_destroy(picap_config* config) { delete config; }

picap_status picap_service_open(const char* data_dir, const picap_config* config, picap_service** out) {
  PICAP_REQUIRE(data_dir && out);
  return guarded([&] {
    picap::ServiceOptions opts;
    if (config) opts.config = config->value;
    auto svc = std::make_unique<picap_service>();
    svc->impl = std::make_unique<picap::AuthService>(data_dir, std::move(opts));
    *out = svc.release();
  });
}

void picap_service_close(picap_service* service) { delete service; }

picap_status picap_register(picap_service* service, const char* user_id, const char* password) {
  PICAP_REQUIRE(service && user_id && password);
  return guarded([&] { service->impl->register_user(user_id, password); });
}

picap_status picap_login_init(picap_service* service, const char* user_id, const char* secret,
                              picap_mode mode, const char* source, picap_ticket** out) {
  PICAP_REQUIRE(service && user_id && secret && out);
  return guarded([&] {
    auto ticket = std::make_unique<picap_ticket>();
    ticket->value = service->impl->login_init(user_id, secret, to_mode(mode), source ? source : "local");
    *out = ticket.release();
  });
}

const char* picap_ticket_id(const picap_ticket* ticket) {
  return ticket ? ticket->value.challenge_id.c_str() : nullptr;
}

const uint8_t* picap_ticket_image(const picap_ticket* ticket, size_t* size) {
  if (!ticket) return nullptr;
  if (size) *size = ticket->value.image.size();
  return ticket->value.image.data();
}

picap_mode picap_ticket_mode(const picap_ticket* ticket) {
  return ticket && ticket->value.mode == picap::Mode::datagram ? PICAP_MODE_DATAGRAM : PICAP_MODE_CHARACTER;
}

int64_t picap_ticket_expires_in(const picap_ticket* ticket) {
  if (!ticket) return 0;
  return std::chrono::duration_cast<std::chrono::seconds>(ticket->value.expires_at - ticket->value.issued_at)
      .count();
}

void picap_ticket_destroy(picap_ticket* ticket) { delete ticket; }

picap_status picap_login_verify(picap_service* service, const char* challenge_id, const picap_point* clicks,
                                size_t click_count, picap_login_result** out) {
  PICAP_REQUIRE(service && challenge_id && out);
  PICAP_REQUIRE(clicks || click_count == 0);
  return guarded([&] {
    std::vector<picap::Point> pts;
    pts.reserve(click_count);
    for (size_t i = 0; i < click_count; ++i) pts.push_back({clicks[i].x, clicks[i].y});
    auto result = std::make_unique<picap_login_result>();
    result->value = service->impl->login_verify(challenge_id, pts);
    if (result->value.next) result->next = std::make_unique<picap_ticket>(picap_ticket{*result->value.next});
    *out = result.release();
  });
}

picap_login_status picap_result_status(const picap_login_result* result) {
  if (!result) return PICAP_LOGIN_REJECTED;
  switch (result->value.status) {
    case picap::LoginStatus::accepted: return PICAP_LOGIN_ACCEPTED;
    case picap::LoginStatus::pending_rechallenge: return PICAP_LOGIN_PENDING;
    case picap::LoginStatus::rejected: return PICAP_LOGIN_REJECTED;
  }
  return PICAP_LOGIN_REJECTED;
}

const char* picap_result_token(const picap_login_result* result) {
  return result && result->value.token ? result->value.token->c_str() : nullptr;
}

const picap_ticket* picap_result_next(const picap_login_result* result) {
  return result ? result->next.get() : nullptr;
}

void picap_login_result_destroy(picap_login_result* result) { delete result; }

picap_status picap_challenge_layout(const picap_service* service, const char* challenge_id,
                                    picap_point* centers, char** labels, size_t capacity, size_t* count) {
  PICAP_REQUIRE(service && challenge_id && count);
  PICAP_REQUIRE((centers || capacity == 0));
  return guarded([&] {
    const auto view = service->impl->visible_challenge(challenge_id);
    if (!view) throw picap::Error(picap::Errc::unknown_challenge, "no live challenge with that id");
    *count = view->centers.size();
    const size_t n = std::min(capacity, view->centers.size());
    for (size_t i = 0; i < n; ++i) {
      centers[i] = {view->centers[i].x, view->centers[i].y};
      if (labels) labels[i] = dup_string(view->labels[i]);
    }
  });
}

picap_status picap_client_hash(const char* password, char out[17]) {
  PICAP_REQUIRE(password && out);
  return guarded([&] {
    const std::string h = picap::client_hash(password);
    std::memcpy(out, h.c_str(), 17);
  });
}

picap_status picap_service_counters(const picap_service* service, picap_counters* out) {
  PICAP_REQUIRE(service && out);
  return guarded([&] {
    const auto c = service->impl->counters();
    out->challenges_issued = c.challenges_issued;
    out->credential_comparisons = c.credential_comparisons;
    out->outcomes_full = c.outcomes[static_cast<int>(picap::Outcome::full)];
    out->outcomes_slight = c.outcomes[static_cast<int>(picap::Outcome::slight)];
    out->outcomes_fail = c.outcomes[static_cast<int>(picap::Outcome::fail)];
  });
}

picap_status picap_server_create(picap_service* service, const picap_server_options* options,
                                 picap_server** out) {
  PICAP_REQUIRE(service && out);
  return guarded([&] {
    picap::HttpOptions opts;
    if (options) {
      if (options->host) opts.host = options->host;
      opts.port = options->port;
      opts.allow_external = options->allow_external != 0;
      if (options->static_dir) opts.static_dir = options->static_dir;
    }
    if (opts.port < 0 || opts.port > 65535) throw picap::Error(picap::Errc::invalid_argument, "bad port");
    auto srv = std::make_unique<picap_server>();
    srv->impl = std::make_unique<picap::HttpServer>(*service->impl, std::move(opts));
    *out = srv.release();
  });
}

picap_status picap_server_bind(picap_server* server, int* port) {
  PICAP_REQUIRE(server);
  return guarded([&] {
    const int p = server->impl->bind();
    if (port) *port = p;
  });
}

picap_status picap_server_run(picap_server* server) {
  PICAP_REQUIRE(server);
  return guarded([&] { server->impl->run(); });
}

void picap_server_stop(picap_server* server) {
  if (server) server->impl->stop();
}

void picap_server_destroy(picap_server* server) { delete server; }

picap_status picap_fsm_distribution(double alpha, double beta, double gamma, unsigned n,
                                    picap_fsm_state* out) {
  PICAP_REQUIRE(out);
  return guarded([&] { *out = to_c(picap::fsm_distribution(alpha, beta, gamma, n)); });
}

picap_status picap_fsm_simulate(double alpha, double beta, double gamma, unsigned rounds, uint64_t trials,
                                uint64_t seed, unsigned threads, picap_fsm_state* out) {
  PICAP_REQUIRE(out);
  return guarded([&] {
    const auto dist = picap::simulate_fsm(alpha, beta, gamma, rounds, trials, seed, threads);
    for (size_t i = 0; i < dist.size(); ++i) out[i] = to_c(dist[i]);
  });
}

void picap_sim_params_init(picap_sim_params* params) {
  if (!params) return;
  *params = picap_sim_params{};
  params->attacker = PICAP_ATTACKER_BLIND;
  params->alpha = 1.0;
  params->mode = PICAP_MODE_CHARACTER;
  params->trials = 1000000;
  params->seed = 1;
  params->budget = 1;
  params->pending_retry = 1;
}

picap_status picap_simulate(const picap_config* config, const picap_sim_params* params, picap_sim_result* out) {
  PICAP_REQUIRE(params && out);
  return guarded([&] {
    picap::SimulationParams sim;
    sim.config = config ? config->value.challenge : picap::ChallengeConfig{};
    if (params->sp_count > 0) sim.config.sp_count = params->sp_count;
    if (params->gp_count > 0) sim.config.gp_count = params->gp_count;
    if (params->segment_count > 0) sim.config.segment_count = params->segment_count;
    sim.model = {to_kind(params->attacker), params->alpha, params->beta, params->gamma};
    sim.mode = to_mode(params->mode);
    sim.trials = params->trials;
    sim.seed = params->seed;
    sim.budget = params->budget;
    sim.pending_retry = params->pending_retry != 0;
    sim.threads = params->threads;
    const picap::SuccessStats stats = picap::simulate_attacker(sim);
    const auto wi = stats.wilson95();
    *out = picap_sim_result{};
    out->trials = stats.trials;
    out->successes = stats.successes;
    out->rate = stats.rate();
    out->wilson_lo = wi.lo;
    out->wilson_hi = wi.hi;
    if (sim.model.kind != picap::AttackerKind::legit_user) {
      const auto measure = picap::analytic_outcome_measure(sim.model, sim.mode, sim.config);
      out->has_analytic = 1;
      out->analytic = picap::to_double(picap::session_acceptance(measure, sim.budget, sim.pending_retry));
    }
  });
}

picap_status picap_report(const picap_config* config, uint64_t trials, uint64_t seed, unsigned threads,
                          const char* csv_path, char** table, int* passed) {
  PICAP_REQUIRE(passed);
  return guarded([&] {
    picap::ReportOptions opts;
    if (config) opts.config = config->value.challenge;
    opts.trials = trials;
    opts.seed = seed;
    opts.threads = threads;
    const auto rows = picap::build_report(opts);
    if (csv_path) {
      std::ofstream csv(csv_path);
      if (!csv) throw picap::Error(picap::Errc::io, std::string("cannot write ") + csv_path);
      picap::write_csv(csv, rows);
      if (!csv.flush()) throw picap::Error(picap::Errc::io, std::string("cannot write ") + csv_path);
    }
    if (table) {
      std::ostringstream text;
      picap::write_table(text, rows);
      *table = dup_string(text.str());
    }
    *passed = picap::report_passed(rows) ? 1 : 0;
  });
}

}  // extern "C"
