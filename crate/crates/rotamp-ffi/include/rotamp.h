#ifndef ROTAMP_H
#define ROTAMP_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum RotampStatus {
  ROTAMP_STATUS_OK = 0,
  ROTAMP_STATUS_NULL_POINTER = 1,
  ROTAMP_STATUS_INVALID_ARGUMENT = 2,
  ROTAMP_STATUS_INVALID_JSON = 3,
  ROTAMP_STATUS_BUFFER_TOO_SMALL = 4,
  ROTAMP_STATUS_INSUFFICIENT_CUMULANTS = 5,
  ROTAMP_STATUS_DOMAIN_ERROR = 6,
  ROTAMP_STATUS_BELOW_TRANSITION = 7,
  ROTAMP_STATUS_NO_CONVERGENCE = 8,
  ROTAMP_STATUS_NUMERICAL_FAILURE = 9,
  ROTAMP_STATUS_SIMULATION_FAILURE = 10,
  ROTAMP_STATUS_PANIC = 11,
} RotampStatus;

// Square or rectangular cumulant table.
typedef enum RotampKind {
  ROTAMP_KIND_SQUARE = 0,
  ROTAMP_KIND_RECTANGULAR = 1,
} RotampKind;

// Moments and free cumulants.
typedef struct RotampCumulants RotampCumulants;

// State-evolution trajectory.
typedef struct RotampSe RotampSe;

// Fixed point of the state evolution. Rectangular-only fields are NaN for symmetric
// problems, and baselines are NaN when unavailable.
typedef struct RotampFixedPoint {
  double delta_star;
  double sigma_star;
  double gamma_star;
  double omega_star;
  double x_star;
  double delta_pca;
  double gamma_pca;
  double residual;
  size_t iterations;
} RotampFixedPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread (empty after a success). The pointer
// stays valid until the next call on the same thread.
const char *rotamp_last_error(void);

// Library version as a static NUL-terminated string.
const char *rotamp_version(void);

// Cumulants from moments `m_1..m_len` (square) or `m_2, m_4, .., m_{2 len}` (rectangular,
// aspect ratio `gamma`).
//
// # Safety
// `moments` must point to `len` readable values and `out` to writable storage.
enum RotampStatus rotamp_cumulants_from_moments(enum RotampKind kind,
                                                const double *moments,
                                                size_t len,
                                                double gamma,
                                                struct RotampCumulants **out);

// `count` cumulants of a spectral law given as JSON (`gamma` is ignored for square tables).
//
// # Safety
// `law_json` must be a NUL-terminated string and `out` writable.
enum RotampStatus rotamp_cumulants_from_law(enum RotampKind kind,
                                            const char *law_json,
                                            double gamma,
                                            size_t count,
                                            struct RotampCumulants **out);

// Number of stored cumulants.
//
// # Safety
// `table` must be a live handle and `out` writable.
enum RotampStatus rotamp_cumulants_len(const struct RotampCumulants *table, size_t *out);

// Copies moments and cumulants into caller buffers of capacity `cap` each; either buffer
// may be null to skip it.
//
// # Safety
// `table` must be a live handle; non-null buffers must hold `cap` values.
enum RotampStatus rotamp_cumulants_values(const struct RotampCumulants *table,
                                          double *moments,
                                          double *cumulants,
                                          size_t cap);

// # Safety
// `table` must be null or a handle not yet freed.
void rotamp_cumulants_free(struct RotampCumulants *table);

// Posterior mean `E[U* | mu U* + N(0, sigma2) = f]`.
//
// # Safety
// `prior_json` must be a NUL-terminated string and `out` writable.
enum RotampStatus rotamp_posterior_mean(const char *prior_json,
                                        double f,
                                        double mu,
                                        double sigma2,
                                        double *out);

// Derivative of the posterior mean in `f`.
//
// # Safety
// As [`rotamp_posterior_mean`].
enum RotampStatus rotamp_posterior_mean_deriv(const char *prior_json,
                                              double f,
                                              double mu,
                                              double sigma2,
                                              double *out);

// Bayes risk of the scalar Gaussian channel at signal-to-noise ratio `s`.
//
// # Safety
// `prior_json` must be a NUL-terminated string and `out` writable.
enum RotampStatus rotamp_mmse(const char *prior_json, double s, double *out);

// Symmetric state evolution over `steps` steps.
//
// # Safety
// Pointers must be valid as described for the other functions.
enum RotampStatus rotamp_se_symmetric(const char *prior_json,
                                      const struct RotampCumulants *cumulants,
                                      double alpha,
                                      double epsilon,
                                      size_t steps,
                                      struct RotampSe **out);

// Rectangular state evolution over `steps` steps.
//
// # Safety
// Pointers must be valid as described for the other functions.
enum RotampStatus rotamp_se_rect(const char *prior_u_json,
                                 const char *prior_v_json,
                                 const struct RotampCumulants *cumulants,
                                 double gamma,
                                 double alpha,
                                 double epsilon,
                                 size_t steps,
                                 struct RotampSe **out);

// Number of steps of a trajectory.
//
// # Safety
// `traj` must be a live handle and `out` writable.
enum RotampStatus rotamp_se_steps(const struct RotampSe *traj, size_t *out);

// Predicted overlaps `E[U_t U*]` for `t = 1..steps+1` (`cap >= steps + 1`).
//
// # Safety
// `traj` must be a live handle and `out` hold `cap` values.
enum RotampStatus rotamp_se_overlap_u(const struct RotampSe *traj, double *out, size_t cap);

// Predicted overlaps `E[V_t V*]` for `t = 1..steps` (rectangular; empty otherwise).
//
// # Safety
// `traj` must be a live handle and `out` hold `cap` values.
enum RotampStatus rotamp_se_overlap_v(const struct RotampSe *traj, double *out, size_t cap);

// Means `mu_1..mu_steps`.
//
// # Safety
// `traj` must be a live handle and `out` hold `cap` values.
enum RotampStatus rotamp_se_mu(const struct RotampSe *traj, double *out, size_t cap);

// Row-major `steps x steps` noise covariance of `F_1..F_steps`.
//
// # Safety
// `traj` must be a live handle and `out` hold `cap` values.
enum RotampStatus rotamp_se_sigma(const struct RotampSe *traj, double *out, size_t cap);

// # Safety
// `traj` must be null or a handle not yet freed.
void rotamp_se_free(struct RotampSe *traj);

// Symmetric fixed point with default Picard settings.
//
// # Safety
// Pointers must be valid as described for the other functions.
enum RotampStatus rotamp_fixed_point_symmetric(const char *prior_json,
                                               const struct RotampCumulants *cumulants,
                                               double alpha,
                                               struct RotampFixedPoint *out);

// Rectangular fixed point with default Picard settings.
//
// # Safety
// Pointers must be valid as described for the other functions.
enum RotampStatus rotamp_fixed_point_rect(const char *prior_u_json,
                                          const char *prior_v_json,
                                          const struct RotampCumulants *cumulants,
                                          double gamma,
                                          double alpha,
                                          struct RotampFixedPoint *out);

// Spectral-PCA overlap `Delta_PCA` of a symmetric model.
//
// # Safety
// `law_json` must be a NUL-terminated string and `out` writable.
enum RotampStatus rotamp_baseline_symmetric(const char *law_json, double alpha, double *out);

// Spectral-PCA overlaps `(Delta_PCA, Gamma_PCA)` of a rectangular model.
//
// # Safety
// `law_json` must be a NUL-terminated string and both outputs writable.
enum RotampStatus rotamp_baseline_rect(const char *law_json,
                                       double gamma,
                                       double alpha,
                                       double *out_delta,
                                       double *out_gamma);

// Runs a command-line command (`"cumulants"`, `"se"`, `"fixed-point"`, `"baseline"`,
// `"simulate"` or `"compare"`) on a JSON configuration and returns its main output as CSV
// (`json_output == 0`) or JSON. Release the string with [`rotamp_string_free`].
//
// # Safety
// Strings must be NUL-terminated and `out` writable.
enum RotampStatus rotamp_run_command(const char *command,
                                     const char *config_json,
                                     int32_t json_output,
                                     char **out);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void rotamp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROTAMP_H */
