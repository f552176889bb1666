#ifndef SECBEAM_H
#define SECBEAM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SecbeamStatus {
  SECBEAM_STATUS_OK = 0,
  SECBEAM_STATUS_NULL_POINTER = 1,
  SECBEAM_STATUS_INVALID_ARGUMENT = 2,
  /**
   * No beamformer meets the request.
   */
  SECBEAM_STATUS_INFEASIBLE = 3,
  SECBEAM_STATUS_SOLVER = 4,
  /**
   * The problem handle has no channel model yet.
   */
  SECBEAM_STATUS_NO_SCENARIO = 5,
  SECBEAM_STATUS_BUFFER_TOO_SMALL = 6,
  SECBEAM_STATUS_PANIC = 7,
} SecbeamStatus;

typedef enum SecbeamScenario {
  SECBEAM_SCENARIO_STATISTICAL_ECSI = 0,
  SECBEAM_SCENARIO_IMPERFECT_ECSI = 1,
  SECBEAM_SCENARIO_IMPERFECT_BOTH = 2,
} SecbeamScenario;

/**
 * Opaque system configuration plus channel model.
 */
typedef struct SecbeamProblem SecbeamProblem;

/**
 * Opaque designed beamformer.
 */
typedef struct SecbeamSolution SecbeamSolution;

/**
 * System parameters in linear units. `noise_eves` and `outage` point to
 * `n_eves` doubles each.
 */
typedef struct SecbeamSystem {
  size_t n_tx;
  size_t n_eves;
  double noise_bob;
  const double *noise_eves;
  double power;
  const double *outage;
} SecbeamSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *secbeam_last_error(void);

/**
 * NUL-terminated library version.
 */
const char *secbeam_version(void);

/**
 * # Safety
 * `sys` must point to a valid [`SecbeamSystem`]; `out` must be writable.
 */
enum SecbeamStatus secbeam_problem_new(const struct SecbeamSystem *sys,
                                       struct SecbeamProblem **out);

/**
 * # Safety
 * `p` must be null or a handle from [`secbeam_problem_new`] not yet freed.
 */
void secbeam_problem_free(struct SecbeamProblem *p);

/**
 * Exact `h` (`2 n_tx` doubles) and one covariance per Eve
 * (`n_eves * 2 n_tx^2` doubles).
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum SecbeamStatus secbeam_problem_set_statistical(struct SecbeamProblem *p,
                                                   const double *h,
                                                   const double *eve_covs);

/**
 * Exact `h`, Eve estimates `g_hat` (`n_eves * 2 n_tx` doubles) and error
 * covariances.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum SecbeamStatus secbeam_problem_set_imperfect_ecsi(struct SecbeamProblem *p,
                                                      const double *h,
                                                      const double *g_hat,
                                                      const double *eve_err_covs);

/**
 * Estimated `h_hat` with error covariance `bob_err_cov` (`2 n_tx^2`
 * doubles) plus Eves as in [`secbeam_problem_set_imperfect_ecsi`].
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum SecbeamStatus secbeam_problem_set_imperfect_both(struct SecbeamProblem *p,
                                                      const double *h_hat,
                                                      const double *bob_err_cov,
                                                      const double *g_hat,
                                                      const double *eve_err_covs);

/**
 * Channels drawn from the built-in random instance family.
 *
 * # Safety
 * `p` must be a live problem handle.
 */
enum SecbeamStatus secbeam_problem_set_random(struct SecbeamProblem *p,
                                              enum SecbeamScenario kind,
                                              double eps_b,
                                              double eps_e,
                                              uint64_t seed);

/**
 * Minimum-power beamformer for secrecy rate `rate`.
 *
 * # Safety
 * `p` must be a live problem handle and `out` writable.
 */
enum SecbeamStatus secbeam_powermin(const struct SecbeamProblem *p,
                                    double rate,
                                    uint64_t seed,
                                    struct SecbeamSolution **out);

/**
 * Largest secrecy rate within the power budget, to tolerance `tol`
 * (0 selects the default). A zero rate is reported as `Infeasible`.
 *
 * # Safety
 * `p` must be a live problem handle and `out` writable.
 */
enum SecbeamStatus secbeam_maxrate(const struct SecbeamProblem *p,
                                   double tol,
                                   uint64_t seed,
                                   struct SecbeamSolution **out);

/**
 * # Safety
 * `s` must be null or a live solution handle.
 */
void secbeam_solution_free(struct SecbeamSolution *s);

/**
 * Target rate of the design; NaN for a null handle.
 *
 * # Safety
 * `s` must be null or a live solution handle.
 */
double secbeam_solution_rate(const struct SecbeamSolution *s);

/**
 * Transmit power `||w||^2`; NaN for a null handle.
 *
 * # Safety
 * `s` must be null or a live solution handle.
 */
double secbeam_solution_power(const struct SecbeamSolution *s);

/**
 * Length of `w`.
 *
 * # Safety
 * `s` must be null or a live solution handle.
 */
size_t secbeam_solution_len(const struct SecbeamSolution *s);

/**
 * Copies `w` into `buf` as `2 * len` interleaved doubles.
 *
 * # Safety
 * `buf` must be valid for `cap` writes.
 */
enum SecbeamStatus secbeam_solution_beamformer(const struct SecbeamSolution *s,
                                               double *buf,
                                               size_t cap);

/**
 * Monte Carlo outage of `w` (`2 n_tx` doubles) at `rate` over `samples`
 * channel draws. Writes one outage per Eve to `per_eve` (`n_eves` doubles)
 * and the worst-Eve secrecy outage to `worst`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum SecbeamStatus secbeam_verify(const struct SecbeamProblem *p,
                                  const double *w,
                                  double rate,
                                  size_t samples,
                                  uint64_t seed,
                                  double *per_eve,
                                  double *worst);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SECBEAM_H */
