#ifndef LCP_PRICER_H
#define LCP_PRICER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Solution method for [`lcp_solve`] and [`lcp_price_american`].
 */
typedef enum LcpMethod {
  LCP_METHOD_POLICY = 0,
  LCP_METHOD_PSOR = 1,
  LCP_METHOD_PENALTY_MAX = 2,
  LCP_METHOD_PENALTY_MIN = 3,
  LCP_METHOD_HYBRID = 4,
  /**
   * Exhaustive enumeration; standalone solves with n <= 16 only.
   */
  LCP_METHOD_ORACLE = 5,
} LcpMethod;

/**
 * Result code of every fallible call.
 */
typedef enum LcpStatus {
  LCP_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  LCP_STATUS_NULL_POINTER = 1,
  /**
   * An argument was out of range or inconsistent.
   */
  LCP_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The iteration stopped without solving the LCP. A report holding the
   * last iterate is still returned where the call produces one.
   */
  LCP_STATUS_NOT_CONVERGED = 3,
  /**
   * A linear solve met a (numerically) zero pivot or singular matrix.
   */
  LCP_STATUS_SINGULAR = 4,
  /**
   * The output buffer is shorter than the data to copy.
   */
  LCP_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * An internal panic was caught.
   */
  LCP_STATUS_PANIC = 6,
} LcpStatus;

/**
 * Opaque LCP instance.
 */
typedef struct LcpProblemHandle LcpProblemHandle;

/**
 * Opaque result of a standalone solve.
 */
typedef struct LcpReportHandle LcpReportHandle;

/**
 * Opaque result of a pricing run.
 */
typedef struct LcpRunHandle LcpRunHandle;

/**
 * Solver settings. Obtain defaults from [`lcp_solve_options_default`].
 */
typedef struct LcpSolveOptions {
  double tol;
  size_t max_iter;
  /**
   * PSOR relaxation parameter in (0, 2).
   */
  double omega;
  /**
   * Penalty parameter for standalone solves.
   */
  double rho;
  /**
   * Scaled penalty parameter for pricing (`rho = rho_prime / k`).
   */
  double rho_prime;
} LcpSolveOptions;

/**
 * Model parameters of the American put. Obtain defaults from
 * [`lcp_model_params_default`].
 */
typedef struct LcpModelParams {
  double r;
  double sigma;
  double maturity;
  double strike;
  double s_max;
} LcpModelParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *lcp_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated
 * and always NUL-terminated when `len > 0`). Returns the full message
 * length excluding the terminator, or 0 if there is no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t lcp_last_error_message(char *buf, size_t len);

struct LcpSolveOptions lcp_solve_options_default(void);

struct LcpModelParams lcp_model_params_default(void);

/**
 * Creates a tridiagonal LCP. `lower[0]` and `upper[n-1]` are padding and
 * must be 0. All arrays hold `n` values.
 *
 * # Safety
 * Array arguments must point to `n` readable values; `out` must be
 * writable.
 */
enum LcpStatus lcp_problem_new_tridiag(size_t n,
                                       const double *lower,
                                       const double *diag,
                                       const double *upper,
                                       const double *b,
                                       const double *c,
                                       struct LcpProblemHandle **out);

/**
 * Creates a dense LCP from a row-major `n * n` matrix (`n <= 16`).
 *
 * # Safety
 * `a` must point to `n * n` values, `b` and `c` to `n` values; `out` must
 * be writable.
 */
enum LcpStatus lcp_problem_new_dense(size_t n,
                                     const double *a,
                                     const double *b,
                                     const double *c,
                                     struct LcpProblemHandle **out);

/**
 * # Safety
 * `p` must be null or a handle from `lcp_problem_new_*` not yet freed.
 */
void lcp_problem_free(struct LcpProblemHandle *p);

/**
 * Number of unknowns, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live problem handle.
 */
size_t lcp_problem_size(const struct LcpProblemHandle *p);

/**
 * Solves `problem` from `x0` (`n` values, or null to start from the
 * obstacle). `options` may be null for defaults. On `NotConverged` the
 * report of the last iterate is still stored in `out`.
 *
 * # Safety
 * `problem` must be a live handle, `x0` null or `n` readable values,
 * `options` null or valid, and `out` writable.
 */
enum LcpStatus lcp_solve(const struct LcpProblemHandle *problem,
                         enum LcpMethod method,
                         const double *x0,
                         const struct LcpSolveOptions *options,
                         struct LcpReportHandle **out);

/**
 * # Safety
 * `r` must be null or a live report handle.
 */
void lcp_report_free(struct LcpReportHandle *r);

/**
 * # Safety
 * `r` must be null or a live report handle.
 */
size_t lcp_report_size(const struct LcpReportHandle *r);

/**
 * Linear solves (or PSOR sweeps) performed.
 *
 * # Safety
 * `r` must be null or a live report handle.
 */
size_t lcp_report_iterations(const struct LcpReportHandle *r);

/**
 * # Safety
 * `r` must be null or a live report handle.
 */
bool lcp_report_converged(const struct LcpReportHandle *r);

/**
 * Whether the solution passes the normalised LCP test.
 *
 * # Safety
 * `r` must be null or a live report handle.
 */
bool lcp_report_lcp_satisfied(const struct LcpReportHandle *r);

/**
 * `||min{A x - b, x - c}||_inf`, or NaN for a null handle.
 *
 * # Safety
 * `r` must be null or a live report handle.
 */
double lcp_report_residual_norm(const struct LcpReportHandle *r);

/**
 * Copies the solution into `buf` (at least `lcp_report_size` values).
 *
 * # Safety
 * `r` must be a live report handle and `buf` point to `len` writable values.
 */
enum LcpStatus lcp_report_solution(const struct LcpReportHandle *r, double *buf, size_t len);

/**
 * Prices the American put on an `n_space x n_time` grid with the
 * theta-scheme. `params` and `options` may be null for defaults. The
 * oracle method is not available here.
 *
 * # Safety
 * Pointer arguments must be null or valid; `out` must be writable.
 */
enum LcpStatus lcp_price_american(const struct LcpModelParams *params,
                                  size_t n_space,
                                  size_t n_time,
                                  double theta,
                                  enum LcpMethod method,
                                  const struct LcpSolveOptions *options,
                                  struct LcpRunHandle **out);

/**
 * # Safety
 * `r` must be null or a live run handle.
 */
void lcp_run_free(struct LcpRunHandle *r);

/**
 * Number of interior nodes.
 *
 * # Safety
 * `r` must be null or a live run handle.
 */
size_t lcp_run_size(const struct LcpRunHandle *r);

/**
 * # Safety
 * `r` must be null or a live run handle.
 */
size_t lcp_run_total_iterations(const struct LcpRunHandle *r);

/**
 * # Safety
 * `r` must be null or a live run handle.
 */
size_t lcp_run_max_iterations(const struct LcpRunHandle *r);

/**
 * # Safety
 * `r` must be null or a live run handle.
 */
double lcp_run_avg_iterations(const struct LcpRunHandle *r);

/**
 * Option value at asset price `s`, interpolated linearly between nodes.
 *
 * # Safety
 * `r` must be null or a live run handle.
 */
double lcp_run_value_at(const struct LcpRunHandle *r, double s);

/**
 * Copies the `t = 0` values on the interior nodes into `buf`.
 *
 * # Safety
 * `r` must be a live run handle and `buf` point to `len` writable values.
 */
enum LcpStatus lcp_run_values(const struct LcpRunHandle *r, double *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LCP_PRICER_H */
