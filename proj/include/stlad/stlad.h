/* C interface to the stlad library.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns a stlad_status; on
 * failure stlad_last_error() describes the problem (per thread). Strings
 * returned through char** are heap-allocated and released with
 * stlad_string_free. Point arrays are row-major, one point per row.
 */
#ifndef STLAD_STLAD_H
#define STLAD_STLAD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(STLAD_BUILDING_LIBRARY)
#define STLAD_API __attribute__((visibility("default")))
#else
#define STLAD_API
#endif

typedef enum stlad_status {
  STLAD_OK = 0,
  STLAD_ERR_INVALID_ARGUMENT = 1,
  STLAD_ERR_PARSE = 2,
  STLAD_ERR_HORIZON = 3,
  STLAD_ERR_IO = 4,
  STLAD_ERR_NUMERIC = 5,
  STLAD_ERR_CONFIG = 6,
  STLAD_ERR_BLACKBOX_CRASH = 7,
  STLAD_ERR_BLACKBOX_TIMEOUT = 8,
  STLAD_ERR_BLACKBOX_PROTOCOL = 9,
  STLAD_ERR_BLACKBOX_REMOTE = 10,
  STLAD_ERR_INTERNAL = 99
} stlad_status;

typedef struct stlad_formula stlad_formula;
typedef struct stlad_trace stlad_trace;
typedef struct stlad_domain stlad_domain;
typedef struct stlad_surrogate stlad_surrogate;
typedef struct stlad_blackbox stlad_blackbox;
typedef struct stlad_campaign stlad_campaign;

STLAD_API const char* stlad_version(void);
STLAD_API const char* stlad_status_name(stlad_status status);
/* Message for the most recent failure on this thread; "" after success. */
STLAD_API const char* stlad_last_error(void);
/* For parse failures: 1-based line and column, 0 otherwise. */
STLAD_API void stlad_last_error_location(size_t* line, size_t* column);
STLAD_API void stlad_string_free(char* s);

/* Formulas */
STLAD_API stlad_status stlad_formula_parse(const char* text, stlad_formula** out);
STLAD_API stlad_status stlad_formula_load(const char* path, stlad_formula** out);
STLAD_API stlad_status stlad_formula_to_string(const stlad_formula* f, char** out);
/* JSON array of warning strings (e.g. predicates whose threshold is unreachable). */
STLAD_API stlad_status stlad_formula_warnings(const stlad_formula* f, char** out_json);
STLAD_API stlad_status stlad_formula_horizon(const stlad_formula* f, double dt, size_t* steps);
STLAD_API void stlad_formula_free(stlad_formula* f);

/* Traces */
STLAD_API stlad_status stlad_trace_load(const char* path, stlad_trace** out);
/* {"dt": s, "channels": {"name": [...], ...}} */
STLAD_API stlad_status stlad_trace_from_json(const char* json, stlad_trace** out);
STLAD_API stlad_status stlad_trace_to_json(const stlad_trace* t, char** out);
STLAD_API size_t stlad_trace_length(const stlad_trace* t);
STLAD_API double stlad_trace_dt(const stlad_trace* t);
STLAD_API void stlad_trace_free(stlad_trace* t);

/* Monitoring */
STLAD_API stlad_status stlad_robustness(const stlad_formula* f, const stlad_trace* t, size_t step, double* out);
STLAD_API stlad_status stlad_bool_sat(const stlad_formula* f, const stlad_trace* t, size_t step, int* out);
/* Robustness at every admissible step; *count receives the number of steps.
 * Pass out = NULL to query the count only. */
STLAD_API stlad_status stlad_robustness_signal(const stlad_formula* f, const stlad_trace* t, double* out,
                                               size_t capacity, size_t* count);

/* Domains and designs */
STLAD_API stlad_status stlad_domain_load(const char* path, stlad_domain** out);
STLAD_API stlad_status stlad_domain_from_json(const char* json, stlad_domain** out);
STLAD_API stlad_status stlad_domain_to_json(const stlad_domain* d, char** out);
STLAD_API size_t stlad_domain_dim(const stlad_domain* d);
STLAD_API stlad_status stlad_domain_contains(const stlad_domain* d, const double* x, size_t dim, int* out);
STLAD_API void stlad_domain_free(stlad_domain* d);

/* out holds n * dim values. */
STLAD_API stlad_status stlad_design_uniform(const stlad_domain* d, size_t n, double* out);
STLAD_API stlad_status stlad_design_glp_unit(size_t n, size_t dim, double* out);
STLAD_API stlad_status stlad_design_random(const stlad_domain* d, size_t n, uint64_t seed, double* out);
STLAD_API stlad_status stlad_design_pool(const stlad_domain* d, size_t n, uint64_t seed, double* out);
/* out holds dim generator entries. */
STLAD_API stlad_status stlad_glp_generator(size_t n, size_t dim, size_t* out);
/* Squared centered L2 discrepancy of n unit-cube points. */
STLAD_API stlad_status stlad_discrepancy(const double* points, size_t n, size_t dim, double* out);
/* Inverse Rosenblatt map of n unit-cube points into the domain. */
STLAD_API stlad_status stlad_domain_map(const stlad_domain* d, const double* unit, size_t n, double* out);

/* Black-boxes */
STLAD_API stlad_status stlad_blackbox_builtin(const char* id, stlad_blackbox** out);
STLAD_API stlad_status stlad_blackbox_external(const char* command, double timeout_s, stlad_blackbox** out);
STLAD_API stlad_status stlad_blackbox_evaluate(stlad_blackbox* bb, const double* x, size_t dim, stlad_trace** out);
STLAD_API stlad_status stlad_blackbox_describe(const stlad_blackbox* bb, char** out);
STLAD_API void stlad_blackbox_free(stlad_blackbox* bb);

/* Spawns the command, checks the handshake and evaluates x (when dim > 0).
 * The JSON report lists each step; the status is that of the first failure. */
STLAD_API stlad_status stlad_protocol_check(const char* command, double timeout_s, const double* x, size_t dim,
                                            char** report_json);

/* Builtin scenarios: formula, domain and black-box. Any out may be NULL. */
STLAD_API stlad_status stlad_scenario_list(char** out_json);
STLAD_API stlad_status stlad_scenario_load(const char* id, stlad_formula** formula, stlad_domain** domain,
                                           stlad_blackbox** blackbox);

/* Campaigns */
typedef struct stlad_campaign_options {
  const char* strategy;   /* "mepe", "ud" or "random" */
  size_t budget;
  size_t n_init;
  size_t pool_size;
  uint64_t seed;
  const char* alpha_rule; /* "squared" or "unsquared" */
  const char* kernel;     /* "matern52" or "se" */
  size_t fit_restarts;
  size_t refit_restarts;
  size_t max_iterations;
} stlad_campaign_options;

STLAD_API void stlad_campaign_options_init(stlad_campaign_options* opts);
STLAD_API stlad_status stlad_campaign_run(const stlad_formula* f, const stlad_domain* d, stlad_blackbox* bb,
                                          const stlad_campaign_options* opts, stlad_campaign** out);
STLAD_API stlad_status stlad_campaign_to_json(const stlad_campaign* c, char** out);
STLAD_API stlad_status stlad_campaign_from_json(const char* json, stlad_campaign** out);
STLAD_API stlad_status stlad_campaign_history_csv(const stlad_campaign* c, char** out);
STLAD_API size_t stlad_campaign_evaluations(const stlad_campaign* c);
/* Copy of the final surrogate. */
STLAD_API stlad_status stlad_campaign_surrogate(const stlad_campaign* c, stlad_surrogate** out);
STLAD_API void stlad_campaign_free(stlad_campaign* c);

/* Surrogates */
STLAD_API stlad_status stlad_surrogate_predict(const stlad_surrogate* s, const double* x, size_t dim, double* mean,
                                               double* variance);
STLAD_API stlad_status stlad_surrogate_to_json(const stlad_surrogate* s, char** out);
STLAD_API stlad_status stlad_surrogate_from_json(const char* json, stlad_surrogate** out);
STLAD_API void stlad_surrogate_free(stlad_surrogate* s);
/* CSV (names..., mean, variance) over a regular grid with resolution[i]
 * points along dimension i. */
STLAD_API stlad_status stlad_field_export_csv(const stlad_surrogate* s, const stlad_domain* d,
                                              const size_t* resolution, size_t dim, char** out);

/* Benchmark. config_json is a benchmark config document; relative file
 * references resolve against base_dir. Outputs go to out_dir when non-NULL.
 * *checks_passed is 0 when any configured ordering check failed. */
STLAD_API stlad_status stlad_bench_run(const char* config_json, const char* base_dir, const char* out_dir,
                                       char** report_json, int* checks_passed);

#ifdef __cplusplus
}
#endif

#endif /* STLAD_STLAD_H */
