#ifndef COHORT_H
#define COHORT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of metrics written by [`cohort_sim_metrics`]: P, RCA, D, C, K, F.
 */
#define COHORT_METRIC_COUNT 6

/**
 * Status codes. Nonzero values match the CLI exit codes where they overlap.
 */
typedef enum CohortStatus {
  COHORT_STATUS_OK = 0,
  COHORT_STATUS_NULL_POINTER = 1,
  COHORT_STATUS_USAGE = 2,
  COHORT_STATUS_CONFIG = 3,
  COHORT_STATUS_IO = 4,
  COHORT_STATUS_NUMERICAL = 5,
  COHORT_STATUS_PANIC = 6,
} CohortStatus;

/**
 * Opaque parameter set.
 */
typedef struct CohortParams CohortParams;

/**
 * Opaque running simulation with its recorded trajectory.
 */
typedef struct CohortSim CohortSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message on this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t cohort_last_error(char *buf, size_t len);

/**
 * Default parameters. Never null.
 */
struct CohortParams *cohort_params_default(void);

/**
 * Parses key-value config text on top of the defaults.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum CohortStatus cohort_params_parse(const char *text, struct CohortParams **out);

/**
 * Sets one key, e.g. `("psi", "pi/2")`.
 *
 * # Safety
 * `params` must come from this library; `key` and `value` must be
 * NUL-terminated strings.
 */
enum CohortStatus cohort_params_set(struct CohortParams *params,
                                    const char *key,
                                    const char *value);

/**
 * # Safety
 * `params` must be null or come from this library and not be used again.
 */
void cohort_params_free(struct CohortParams *params);

/**
 * Validates `params` and builds the initial world.
 *
 * # Safety
 * `params` must come from this library; `out` must be valid for writes.
 */
enum CohortStatus cohort_sim_new(const struct CohortParams *params, struct CohortSim **out);

/**
 * Advances `steps` synchronous steps.
 *
 * # Safety
 * `sim` must come from this library.
 */
enum CohortStatus cohort_sim_step(struct CohortSim *sim, size_t steps);

/**
 * Number of agents, or 0 for a null handle.
 *
 * # Safety
 * `sim` must be null or come from this library.
 */
size_t cohort_sim_agent_count(const struct CohortSim *sim);

/**
 * Steps taken so far, or 0 for a null handle.
 *
 * # Safety
 * `sim` must be null or come from this library.
 */
size_t cohort_sim_current_step(const struct CohortSim *sim);

/**
 * Writes current poses as `x, y, theta` triples; `len` counts doubles and
 * must be at least three times the agent count.
 *
 * # Safety
 * `sim` must come from this library; `out` must be valid for `len` doubles.
 */
enum CohortStatus cohort_sim_poses(const struct CohortSim *sim, double *out, size_t len);

/**
 * Metrics of the steps recorded so far, written as P, RCA, D, C, K, F into
 * `out[0..COHORT_METRIC_COUNT]`.
 *
 * # Safety
 * `sim` must come from this library; `out` must be valid for
 * [`COHORT_METRIC_COUNT`] doubles.
 */
enum CohortStatus cohort_sim_metrics(const struct CohortSim *sim, double *out);

/**
 * # Safety
 * `sim` must be null or come from this library and not be used again.
 */
void cohort_sim_free(struct CohortSim *sim);

/**
 * `E|X - d0|` for `X ~ N(mu_d, sigma_d^2)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CohortStatus cohort_expected_abs_deviation(double mu_d,
                                                double sigma_d,
                                                double d0,
                                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COHORT_H */
