#ifndef UBW1_H
#define UBW1_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

/**
 * Result codes. Zero is success; every library error kind has its own code.
 */
typedef enum Ubw1Status {
  UBW1_STATUS_OK = 0,
  UBW1_STATUS_NULL_POINTER = 1,
  UBW1_STATUS_INVALID_UTF8 = 2,
  UBW1_STATUS_PANIC = 3,
  UBW1_STATUS_MASS_MISMATCH = 10,
  UBW1_STATUS_EMPTY_SPACE = 11,
  UBW1_STATUS_SPACE_MISMATCH = 12,
  UBW1_STATUS_INVALID_MEASURE = 13,
  UBW1_STATUS_UNKNOWN_NAME = 14,
  UBW1_STATUS_INVALID_PARAMETERS = 15,
  UBW1_STATUS_NEGATIVE_MASS = 16,
  UBW1_STATUS_NEGATIVE_DENSITY = 17,
  UBW1_STATUS_INFEASIBLE_MODEL = 18,
  UBW1_STATUS_INFEASIBLE_CHANGE = 19,
  UBW1_STATUS_MODEL_MISMATCH = 20,
  UBW1_STATUS_INFEASIBLE_PAIR = 21,
  UBW1_STATUS_OUT_OF_RANGE = 22,
  UBW1_STATUS_VALIDATION = 23,
  UBW1_STATUS_NON_CONVERGENCE = 30,
  UBW1_STATUS_DEGENERATE_SLOPE = 31,
  UBW1_STATUS_INCONCLUSIVE = 32,
  UBW1_STATUS_NOT_OPTIMAL_INPUT = 33,
  UBW1_STATUS_CYCLE_GUARD_EXCEEDED = 34,
  UBW1_STATUS_LP_FAILURE = 35,
  UBW1_STATUS_INFINITE_COST = 36,
  UBW1_STATUS_IO = 40,
  UBW1_STATUS_JSON = 41,
  UBW1_STATUS_CSV = 42,
} Ubw1Status;

/**
 * A local discrepancy `c_S`.
 */
typedef struct Ubw1Discrepancy Ubw1Discrepancy;

/**
 * A dynamic penalty `h_D` with its flow.
 */
typedef struct Ubw1Dynamic Ubw1Dynamic;

/**
 * Optimal couplings and potentials of a static problem.
 */
typedef struct Ubw1Solution Ubw1Solution;

/**
 * Outcome of a two-Dirac problem.
 */
typedef struct Ubw1DiracResult {
  double a;
  double b;
  double alpha;
  double beta;
  double value;
  /**
   * 0 interior, 1 no transport before the change, 2 no transport after
   * it, 3 other boundary case.
   */
  int32_t regime;
  bool swapped;
  bool nonunique;
} Ubw1DiracResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null after a success.
 * The pointer stays valid until the next call into the library on this thread.
 */
const char *ubw1_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ubw1_version(void);

/**
 * Look up a catalog model such as `hellinger`, `tv` or `power(2)`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out_handle` a valid pointer.
 */
enum Ubw1Status ubw1_discrepancy_new(const char *name, struct Ubw1Discrepancy **out_handle);

/**
 * Model with `h_S` given by breakpoints and values, interpolated linearly.
 *
 * # Safety
 * `breakpoints` and `values` must point to `len` doubles each.
 */
enum Ubw1Status ubw1_discrepancy_from_profile(const double *breakpoints,
                                              const double *values,
                                              size_t len,
                                              struct Ubw1Discrepancy **out_handle);

/**
 * # Safety
 * `handle` must come from a constructor of this library, or be null.
 */
void ubw1_discrepancy_free(struct Ubw1Discrepancy *handle);

/**
 * `c_S(m0, m1)`, possibly `+inf`.
 *
 * # Safety
 * `handle` and `value` must be valid pointers.
 */
enum Ubw1Status ubw1_discrepancy_eval(const struct Ubw1Discrepancy *handle,
                                      double m0,
                                      double m1,
                                      double *value);

/**
 * Maximal transport distances `L₀` and `L₁`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum Ubw1Status ubw1_discrepancy_max_distances(const struct Ubw1Discrepancy *handle,
                                               double *l0,
                                               double *l1);

/**
 * Semi-coupling cost of moving `m0` to `m1` over distance `dx`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum Ubw1Status ubw1_semicoupling_cost(const struct Ubw1Discrepancy *handle,
                                       double dx,
                                       double m0,
                                       double m1,
                                       double *primal,
                                       double *dual);

/**
 * Two Diracs at `0` and `L`.
 *
 * # Safety
 * `handle` and `result` must be valid pointers.
 */
enum Ubw1Status ubw1_dirac_solve(const struct Ubw1Discrepancy *handle,
                                 double l,
                                 double m00,
                                 double m0l,
                                 double m10,
                                 double m1l,
                                 struct Ubw1DiracResult *result);

/**
 * Solve the static problem for `n` Euclidean points in dimension `dim`.
 * `points` is row major, `n * dim` doubles; `rho0` and `rho1` hold `n`
 * weights each.
 *
 * # Safety
 * Array pointers must cover the stated lengths; the other pointers must be valid.
 */
enum Ubw1Status ubw1_solve_static(const struct Ubw1Discrepancy *handle,
                                  const double *points,
                                  size_t n,
                                  size_t dim,
                                  const double *rho0,
                                  const double *rho1,
                                  size_t cuts,
                                  struct Ubw1Solution **out_handle);

/**
 * # Safety
 * `handle` must come from [`ubw1_solve_static`], or be null.
 */
void ubw1_solution_free(struct Ubw1Solution *handle);

/**
 * Primal and dual values of a solution.
 *
 * # Safety
 * All pointers must be valid.
 */
enum Ubw1Status ubw1_solution_values(const struct Ubw1Solution *handle,
                                     double *primal,
                                     double *dual);

/**
 * Number of points of the solution's space.
 *
 * # Safety
 * `handle` and `n` must be valid pointers.
 */
enum Ubw1Status ubw1_solution_len(const struct Ubw1Solution *handle, size_t *n);

/**
 * Copy both couplings, row major, into buffers of `len` doubles each;
 * `len` must be at least `n * n`.
 *
 * # Safety
 * `pi0` and `pi1` must be writable for `len` doubles.
 */
enum Ubw1Status ubw1_solution_couplings(const struct Ubw1Solution *handle,
                                        double *pi0,
                                        double *pi1,
                                        size_t len);

/**
 * Copy the potentials into buffers of `len ≥ n` doubles each.
 *
 * # Safety
 * `alpha` and `beta` must be writable for `len` doubles.
 */
enum Ubw1Status ubw1_solution_potentials(const struct Ubw1Solution *handle,
                                         double *alpha,
                                         double *beta,
                                         size_t len);

/**
 * Look up a dynamic model such as `hellinger` or `tv`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out_handle` a valid pointer.
 */
enum Ubw1Status ubw1_dynamic_new(const char *name, struct Ubw1Dynamic **out_handle);

/**
 * # Safety
 * `handle` must come from [`ubw1_dynamic_new`], or be null.
 */
void ubw1_dynamic_free(struct Ubw1Dynamic *handle);

/**
 * `F_t(z)`.
 *
 * # Safety
 * `handle` and `value` must be valid pointers.
 */
enum Ubw1Status ubw1_dynamic_flow(const struct Ubw1Dynamic *handle,
                                  double t,
                                  double z,
                                  double *value);

/**
 * `c_D(ρ, ζ)`, possibly `+inf`.
 *
 * # Safety
 * `handle` and `value` must be valid pointers.
 */
enum Ubw1Status ubw1_dynamic_cost(const struct Ubw1Dynamic *handle,
                                  double rho,
                                  double zeta,
                                  double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UBW1_H */
