#ifndef HOMOCLINIC_H
#define HOMOCLINIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum HcStatus {
  HC_STATUS_OK = 0,
  HC_STATUS_NULL_POINTER = 1,
  HC_STATUS_INVALID_UTF8 = 2,
  HC_STATUS_CONFIGURATION = 3,
  HC_STATUS_DIMENSION = 4,
  HC_STATUS_DOMAIN = 5,
  HC_STATUS_HYPOTHESIS_VIOLATION = 6,
  HC_STATUS_SPECTRAL_GAP = 7,
  HC_STATUS_NUMERICAL = 8,
  /**
   * The hypothesis check reported a failure.
   */
  HC_STATUS_CHECK_FAILED = 9,
  /**
   * The solve found no verified orbit.
   */
  HC_STATUS_NO_ORBIT = 10,
  HC_STATUS_INDEX_OUT_OF_RANGE = 11,
  HC_STATUS_BUFFER_TOO_SMALL = 12,
  HC_STATUS_PANIC = 13,
} HcStatus;

/**
 * A parsed problem configuration with its solve context.
 */
typedef struct HcProblem HcProblem;

/**
 * Distinct verified orbits, sorted by the action value.
 */
typedef struct HcSolution HcSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hc_version(void);

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into the library from the same thread.
 */
const char *hc_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must be NULL or a string returned through an out-parameter of this
 * library that has not been freed yet.
 */
void hc_string_free(char *s);

/**
 * Parses a JSON problem configuration and builds its solve context.
 *
 * # Safety
 * `json` must be NULL or a NUL-terminated string; `out` must be NULL or
 * point to writable storage for a handle.
 */
enum HcStatus hc_problem_from_json(const char *json, struct HcProblem **out);

/**
 * Releases a problem. NULL is ignored.
 *
 * # Safety
 * `p` must be NULL or a handle from `hc_problem_from_json` not yet freed.
 */
void hc_problem_free(struct HcProblem *p);

/**
 * Block dimension `N`, window half width `M` and number of doubles in an
 * orbit buffer, `(2M + 1) * 2N`. Any out-pointer may be NULL.
 *
 * # Safety
 * `p` must be a live problem handle; non-null out-pointers must be writable.
 */
enum HcStatus hc_problem_dims(const struct HcProblem *p,
                              size_t *block_dim,
                              size_t *half_width,
                              size_t *orbit_len);

/**
 * Coercivity bounds `λ₀` and `Λ₀` of the coefficients.
 *
 * # Safety
 * `p` must be a live problem handle; out-pointers must be writable.
 */
enum HcStatus hc_problem_bounds(const struct HcProblem *p, double *lambda0, double *big_lambda0);

/**
 * Runs the hypothesis checker. Writes the JSON report to `report_json`
 * (may be NULL) and returns `CHECK_FAILED` when any hypothesis fails.
 *
 * # Safety
 * `p` must be a live problem handle; `report_json` must be NULL or writable.
 */
enum HcStatus hc_problem_check(const struct HcProblem *p, char **report_json);

/**
 * Evaluates the action functional at `x` (`len` doubles, node-major).
 *
 * # Safety
 * `p` must be a live problem handle; `x` must point to `len` readable
 * doubles; `out` must be writable.
 */
enum HcStatus hc_problem_phi(const struct HcProblem *p, const double *x, size_t len, double *out);

/**
 * Multi-start solve with the configured solver options. On success `out`
 * holds a handle with at least one orbit; `NO_ORBIT` leaves it NULL.
 *
 * # Safety
 * `p` must be a live problem handle; `out` must be writable.
 */
enum HcStatus hc_solve(const struct HcProblem *p, struct HcSolution **out);

/**
 * Releases a solve result. NULL is ignored.
 *
 * # Safety
 * `s` must be NULL or a handle from `hc_solve` not yet freed.
 */
void hc_solution_free(struct HcSolution *s);

/**
 * Number of orbits in `s`; 0 for NULL.
 *
 * # Safety
 * `s` must be NULL or a live solution handle.
 */
size_t hc_solution_count(const struct HcSolution *s);

/**
 * Action value and `l∞` norm of orbit `index`. Either out-pointer may be NULL.
 *
 * # Safety
 * `s` must be a live solution handle; non-null out-pointers must be writable.
 */
enum HcStatus hc_solution_orbit_info(const struct HcSolution *s,
                                     size_t index,
                                     double *phi_value,
                                     double *linf_norm);

/**
 * Copies orbit `index` into `buf` (capacity `cap` doubles). `len` receives
 * the required length even when the buffer is too small.
 *
 * # Safety
 * `s` must be a live solution handle; `buf` must be NULL or point to `cap`
 * writable doubles; `len` must be NULL or writable.
 */
enum HcStatus hc_solution_orbit(const struct HcSolution *s,
                                size_t index,
                                double *buf,
                                size_t cap,
                                size_t *len);

/**
 * JSON verification report of orbit `index`.
 *
 * # Safety
 * `s` must be a live solution handle; `out` must be writable.
 */
enum HcStatus hc_solution_report_json(const struct HcSolution *s, size_t index, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOMOCLINIC_H */
