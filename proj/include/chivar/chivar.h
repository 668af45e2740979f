/* chivar: covariation estimators, window-process calculus and
 * representation engines behind a C interface.
 *
 * All functions return a chivar_status; non-OK calls leave a message
 * retrievable through chivar_last_error() (thread-local). Objects are
 * opaque handles released with the matching _free call.
 */
#ifndef CHIVAR_H
#define CHIVAR_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum chivar_status {
  CHIVAR_OK = 0,
  CHIVAR_ERROR_INVALID_ARGUMENT = 1,
  CHIVAR_ERROR_CONFIG = 2,
  CHIVAR_ERROR_NUMERIC_ASSERT = 3,
  CHIVAR_ERROR_DEGENERATE = 4,
  CHIVAR_ERROR_IO = 5,
  CHIVAR_ERROR_INTERNAL = 6
} chivar_status;

const char* chivar_version(void);
/* Message from the last failing call on this thread ("" if none). */
const char* chivar_last_error(void);

/* ---- sampled paths ---------------------------------------------------- */

typedef struct chivar_path chivar_path;

/* values must hold steps + 1 nodes of a uniform grid on [0, horizon]. */
chivar_status chivar_path_create(double horizon, int64_t steps, const double* values,
                                 chivar_path** out);
/* Brownian sample; every increment is a pure function of
 * (seed, path_index, step). */
chivar_status chivar_path_wiener(double horizon, int64_t steps, uint64_t seed,
                                 uint64_t path_index, chivar_path** out);
chivar_status chivar_path_read_csv(const char* file, chivar_path** out);
chivar_status chivar_path_write_csv(const chivar_path* path, const char* file);
int64_t chivar_path_steps(const chivar_path* path);
/* Boundary-extended, piecewise-linear evaluation. */
double chivar_path_value_at(const chivar_path* path, double t);
void chivar_path_free(chivar_path* path);

/* ---- covariation curves ------------------------------------------------ */

typedef struct chivar_curve chivar_curve;

/* [X,Y]^eps with eps an integer multiple of the grid step. */
chivar_status chivar_epsilon_covariation(const chivar_path* x, const chivar_path* y, double eps,
                                         chivar_curve** out);
/* int H d[X,Y]^eps with the same discretization. */
chivar_status chivar_weighted_bracket(const chivar_path* h, const chivar_path* x,
                                      const chivar_path* y, double eps, chivar_curve** out);
int64_t chivar_curve_size(const chivar_curve* curve);
/* Copies min(size, cap) node values into out; returns the number copied. */
int64_t chivar_curve_values(const chivar_curve* curve, double* out, int64_t cap);
double chivar_curve_sup_abs(const chivar_curve* curve);
chivar_status chivar_curve_write_csv(const chivar_curve* curve, const char* file);
void chivar_curve_free(chivar_curve* curve);

/* Orthogonality diagnostic over a decreasing eps schedule; the JSON report
 * {schedule, sup_norms, verdict} is returned as a malloc'd string to free
 * with chivar_string_free. */
chivar_status chivar_orthogonality_report(const chivar_path* a, const chivar_path* n,
                                          const double* schedule, int64_t schedule_len,
                                          double threshold, char** report_json);

/* ---- experiment runner -------------------------------------------------- */

typedef struct chivar_run_options {
  const char* out_dir;  /* NULL: use the config's "output" */
  int has_seed;
  uint64_t seed;        /* overrides the config seed when has_seed != 0 */
  int threads;          /* <= 1 for serial */
  int assert_mode;      /* evaluate the config's assert block */
} chivar_run_options;

typedef struct chivar_run_result chivar_run_result;

/* Validates a config file; *report_json receives {"valid":...,"errors":[...]}
 * (free with chivar_string_free). Returns CHIVAR_ERROR_CONFIG when invalid. */
chivar_status chivar_experiment_validate(const char* config_path, char** report_json);

/* Runs a config file. CHIVAR_ERROR_NUMERIC_ASSERT signals assert-mode
 * threshold failures; outputs are still written. */
chivar_status chivar_experiment_run(const char* config_path, const chivar_run_options* options,
                                    chivar_run_result** out);
int chivar_result_numeric_failures(const chivar_run_result* result);
const char* chivar_result_manifest_path(const chivar_run_result* result);
const char* chivar_result_error_report(const chivar_run_result* result);
void chivar_result_free(chivar_run_result* result);

void chivar_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* CHIVAR_H */
