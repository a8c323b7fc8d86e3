#ifndef PICAP_PICAP_H
#define PICAP_PICAP_H

/*
 * C interface to the picap login service and its analysis tools.
 *
 * Every handle is opaque and owned by the caller until passed to its
 * matching destroy function. Functions returning picap_status leave a
 * message for picap_last_error() on failure (per thread).
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PICAP_API __declspec(dllexport)
#else
#define PICAP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum picap_status {
  PICAP_OK = 0,
  PICAP_E_INVALID_ARGUMENT = 1,
  PICAP_E_INVALID_CONFIG = 2,
  PICAP_E_INSUFFICIENT_DISTINCT_GLYPHS = 3,
  PICAP_E_ALPHABET_EXHAUSTED = 4,
  PICAP_E_HASH_TOO_SHORT = 5,
  PICAP_E_UNKNOWN_SLOT = 6,
  PICAP_E_NOT_A_PERMUTATION = 7,
  PICAP_E_TERMINAL_STATE = 8,
  PICAP_E_INVALID_PROBABILITIES = 9,
  PICAP_E_NO_ACTIVE_CHALLENGE = 10,
  PICAP_E_BUCKET_EMPTY = 11,
  PICAP_E_LAYOUT_OVERFLOW = 12,
  PICAP_E_OUT_OF_BOUNDS = 13,
  PICAP_E_DUPLICATE_BLOCK_CLICK = 14,
  PICAP_E_DUPLICATE_USER = 15,
  PICAP_E_WEAK_PASSWORD = 16,
  PICAP_E_RATE_LIMITED = 17,
  PICAP_E_MALFORMED_SECRET = 18,
  PICAP_E_UNKNOWN_CHALLENGE = 19,
  PICAP_E_EXPIRED = 20,
  PICAP_E_ALREADY_CONSUMED = 21,
  PICAP_E_STORAGE = 22,
  PICAP_E_UNSUPPORTED_MODEL = 23,
  PICAP_E_TOO_LARGE = 24,
  PICAP_E_IO = 25,
  PICAP_E_INTERNAL = 100
} picap_status;

typedef enum picap_mode { PICAP_MODE_CHARACTER = 0, PICAP_MODE_DATAGRAM = 1 } picap_mode;

typedef enum picap_login_status {
  PICAP_LOGIN_ACCEPTED = 0,
  PICAP_LOGIN_PENDING = 1,
  PICAP_LOGIN_REJECTED = 2
} picap_login_status;

typedef enum picap_attacker {
  PICAP_ATTACKER_BLIND = 0,
  PICAP_ATTACKER_COUNT_AWARE = 1,
  PICAP_ATTACKER_TYPER = 2,
  PICAP_ATTACKER_LEGIT = 3
} picap_attacker;

typedef struct picap_config picap_config;
typedef struct picap_service picap_service;
typedef struct picap_ticket picap_ticket;
typedef struct picap_login_result picap_login_result;
typedef struct picap_server picap_server;

typedef struct picap_point {
  int32_t x;
  int32_t y;
} picap_point;

/* Stable snake_case name, e.g. "rate_limited". */
PICAP_API const char* picap_status_string(picap_status status);
/* Message for the last failure on this thread; "" if none. */
PICAP_API const char* picap_last_error(void);
PICAP_API void picap_string_free(char* s);

/* ---- configuration ---- */

PICAP_API picap_status picap_config_create(picap_config** out);
/* key=value file, '#' comments. */
PICAP_API picap_status picap_config_load(const char* path, picap_config** out);
PICAP_API picap_status picap_config_set(picap_config* config, const char* key, const char* value);
PICAP_API void picap_config_destroy(picap_config* config);

/* ---- service ---- */

/* config may be NULL for defaults. data_dir is created if missing. */
PICAP_API picap_status picap_service_open(const char* data_dir, const picap_config* config,
                                          picap_service** out);
PICAP_API void picap_service_close(picap_service* service);

PICAP_API picap_status picap_register(picap_service* service, const char* user_id, const char* password);

/* secret: the password (character mode) or the 16-hex client hash
 * (datagram mode). source identifies the caller for rate limiting and may be
 * NULL. */
PICAP_API picap_status picap_login_init(picap_service* service, const char* user_id, const char* secret,
                                        picap_mode mode, const char* source, picap_ticket** out);

PICAP_API const char* picap_ticket_id(const picap_ticket* ticket);
PICAP_API const uint8_t* picap_ticket_image(const picap_ticket* ticket, size_t* size);
PICAP_API picap_mode picap_ticket_mode(const picap_ticket* ticket);
PICAP_API int64_t picap_ticket_expires_in(const picap_ticket* ticket);
PICAP_API void picap_ticket_destroy(picap_ticket* ticket);

PICAP_API picap_status picap_login_verify(picap_service* service, const char* challenge_id,
                                          const picap_point* clicks, size_t click_count,
                                          picap_login_result** out);

PICAP_API picap_login_status picap_result_status(const picap_login_result* result);
/* NULL unless accepted. */
PICAP_API const char* picap_result_token(const picap_login_result* result);
/* NULL unless pending; owned by the result. */
PICAP_API const picap_ticket* picap_result_next(const picap_login_result* result);
PICAP_API void picap_login_result_destroy(picap_login_result* result);

/* Label centers of a live challenge in display order, for scripted clients.
 * Writes up to `capacity` points and labels; *count receives the total. */
PICAP_API picap_status picap_challenge_layout(const picap_service* service, const char* challenge_id,
                                              picap_point* centers, char** labels, size_t capacity,
                                              size_t* count);

/* In-process client hash of a password (16 lowercase hex digits + NUL). */
PICAP_API picap_status picap_client_hash(const char* password, char out[17]);

typedef struct picap_counters {
  uint64_t challenges_issued;
  uint64_t credential_comparisons;
  uint64_t outcomes_full;
  uint64_t outcomes_slight;
  uint64_t outcomes_fail;
} picap_counters;

PICAP_API picap_status picap_service_counters(const picap_service* service, picap_counters* out);

/* ---- HTTP server ---- */

typedef struct picap_server_options {
  const char* host;       /* NULL = 127.0.0.1 */
  int port;               /* 0 = any free port */
  int allow_external;     /* required for non-loopback hosts */
  const char* static_dir; /* NULL = no static files */
} picap_server_options;

PICAP_API picap_status picap_server_create(picap_service* service, const picap_server_options* options,
                                           picap_server** out);
PICAP_API picap_status picap_server_bind(picap_server* server, int* port);
/* Blocks until picap_server_stop. */
PICAP_API picap_status picap_server_run(picap_server* server);
PICAP_API void picap_server_stop(picap_server* server);
PICAP_API void picap_server_destroy(picap_server* server);

/* ---- analysis ---- */

typedef struct picap_fsm_state {
  double s;
  double p;
  double r;
} picap_fsm_state;

PICAP_API picap_status picap_fsm_distribution(double alpha, double beta, double gamma, unsigned n,
                                              picap_fsm_state* out);
/* out must hold rounds + 1 entries. threads = 0 uses every core. */
PICAP_API picap_status picap_fsm_simulate(double alpha, double beta, double gamma, unsigned rounds,
                                          uint64_t trials, uint64_t seed, unsigned threads,
                                          picap_fsm_state* out);

typedef struct picap_sim_params {
  picap_attacker attacker;
  double alpha, beta, gamma; /* legit users only */
  picap_mode mode;
  int sp_count;              /* 0 keeps the config value */
  int gp_count;
  int segment_count;
  uint64_t trials;
  uint64_t seed;
  unsigned budget;
  int pending_retry;
  unsigned threads;
} picap_sim_params;

typedef struct picap_sim_result {
  uint64_t trials;
  uint64_t successes;
  double rate;
  double wilson_lo;
  double wilson_hi;
  int has_analytic;
  double analytic;
} picap_sim_result;

PICAP_API void picap_sim_params_init(picap_sim_params* params);
/* config may be NULL for defaults. */
PICAP_API picap_status picap_simulate(const picap_config* config, const picap_sim_params* params,
                                      picap_sim_result* out);

/* Runs the standard scenarios. Writes CSV to csv_path when non-NULL and a
 * human-readable table to *table (free with picap_string_free) when non-NULL.
 * *passed is 1 iff every row agrees and every enforced threshold holds. */
PICAP_API picap_status picap_report(const picap_config* config, uint64_t trials, uint64_t seed,
                                    unsigned threads, const char* csv_path, char** table, int* passed);

#ifdef __cplusplus
}
#endif

#endif
