#ifndef FRACLANE_H
#define FRACLANE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FlStatus {
  FL_STATUS_OK = 0,
  FL_STATUS_NULL_POINTER = 1,
  FL_STATUS_INVALID_ARGUMENT = 2,
  FL_STATUS_REGIME_VIOLATION = 3,
  FL_STATUS_NOT_INTEGRABLE = 4,
  FL_STATUS_QUADRATURE_FAILED = 5,
  FL_STATUS_SINGULAR_SYSTEM = 6,
  FL_STATUS_NO_CONVERGENCE = 7,
  FL_STATUS_BLOWUP = 8,
  FL_STATUS_BUFFER_TOO_SMALL = 9,
  FL_STATUS_PANIC = 10,
} FlStatus;

typedef enum FlRegime {
  FL_REGIME_SERRIN_SUBCRITICAL = 0,
  FL_REGIME_SERRIN_SUPERCRITICAL_SOBOLEV_SUB = 1,
  FL_REGIME_SOBOLEV_CRITICAL = 2,
  FL_REGIME_SOBOLEV_SUPERCRITICAL = 3,
} FlRegime;

// Opaque problem data (N, s, theta, p).
typedef struct FlProblem FlProblem;

// Opaque radial profile with the summary of the solve that produced it.
typedef struct FlProfile FlProfile;

// Convergence summary of the solve that produced a profile.
typedef struct FlSolveInfo {
  size_t iterations;
  double residual_sup;
  bool converged;
  bool monotone;
  bool cap_exceeded;
  // Eigenvalue for profiles from [`fl_eigenpair`], NaN otherwise.
  double eigenvalue;
} FlSolveInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL terminated,
// truncated to `len`). Returns the full message length without the NUL, or
// 0 if there is no error.
//
// # Safety
// `buf` must be NULL or point to `len` writable bytes.
size_t fl_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *fl_version(void);

// Power multiplier C_s(tau) with (-Delta)^s |x|^tau = C_s(tau) |x|^{tau - 2s}.
//
// # Safety
// `out` must be a valid pointer to a double.
enum FlStatus fl_spectral_constant(uint32_t n, double s, double tau, double *out);

// Optimal Hardy constant mu_0 = -C_s((2s - N)/2).
//
// # Safety
// `out` must be a valid pointer to a double.
enum FlStatus fl_mu_zero(uint32_t n, double s, double *out);

// The two roots tau_- <= tau_+ of C_s(tau) = -mu for mu >= -mu_0.
//
// # Safety
// `tau_minus` and `tau_plus` must be valid pointers to doubles.
enum FlStatus fl_hardy_exponents(uint32_t n,
                                 double s,
                                 double mu,
                                 double *tau_minus,
                                 double *tau_plus);

// Serrin exponent (N + theta)/(N - 2s).
double fl_serrin_exponent(uint32_t n, double s, double theta);

// Sobolev exponent (N + 2s + 2 theta)/(N - 2s).
double fl_sobolev_exponent(uint32_t n, double s, double theta);

// Exterior-to-interior weight exponent.
double fl_theta_star(uint32_t n, double s, double theta_tilde, double p);

// Validates (N, s, theta, p) and creates a problem handle. With
// `unrestricted` the Serrin-supercritical requirement is skipped.
//
// # Safety
// `out` must be a valid pointer; on success it receives a handle to be
// released with [`fl_problem_free`].
enum FlStatus fl_problem_new(uint32_t n,
                             double s,
                             double theta,
                             double p,
                             bool unrestricted,
                             struct FlProblem **out);

// # Safety
// `problem` must be NULL or a handle from [`fl_problem_new`] not yet freed.
void fl_problem_free(struct FlProblem *problem);

// Singular exponent beta = (2s + theta)/(p - 1); NaN for a NULL handle.
//
// # Safety
// `problem` must be NULL or a live handle.
double fl_problem_beta(const struct FlProblem *problem);

// Coefficient K of the singular profile K |x|^{-beta}.
//
// # Safety
// `problem` must be a live handle and `out` a valid pointer.
enum FlStatus fl_problem_kappa(const struct FlProblem *problem, double *out);

// # Safety
// `problem` must be a live handle and `out` a valid pointer.
enum FlStatus fl_problem_regime(const struct FlProblem *problem, enum FlRegime *out);

// Newton solve for the singular profile on a log-uniform grid of `nodes`
// points in [r_min, r_max], exterior data K r^{-beta}, seeded at
// (1 + delta) K r^{-beta}. Fails with [`FlStatus::NoConvergence`] if the
// iteration stalls.
//
// # Safety
// `problem` must be a live handle and `out` a valid pointer; on success it
// receives a profile to be released with [`fl_profile_free`].
enum FlStatus fl_solve_singular(const struct FlProblem *problem,
                                double r_min,
                                double r_max,
                                size_t nodes,
                                double delta,
                                struct FlProfile **out);

// Minimal solution with constant exterior value `b`, by monotone
// iteration. A profile is returned even when the sup-norm cap is exceeded;
// check `cap_exceeded` in [`fl_profile_info`].
//
// # Safety
// As for [`fl_solve_singular`].
enum FlStatus fl_solve_minimal(const struct FlProblem *problem,
                               double b,
                               double r_min,
                               double r_max,
                               size_t nodes,
                               struct FlProfile **out);

// First Dirichlet eigenpair of (-Delta)^s on the ball of radius `r_max`,
// on a grid refined toward both the origin and the boundary. The
// eigenvalue is stored in the profile's info.
//
// # Safety
// `out` must be a valid pointer; on success it receives a profile.
enum FlStatus fl_eigenpair(uint32_t n,
                           double s,
                           double r_min,
                           double r_max,
                           double gap,
                           size_t nodes,
                           struct FlProfile **out);

// Kelvin transform of a profile; the result has the same info.
//
// # Safety
// `profile` must be a live handle and `out` a valid pointer.
enum FlStatus fl_profile_kelvin(const struct FlProfile *profile,
                                uint32_t n,
                                double s,
                                struct FlProfile **out);

// # Safety
// `profile` must be NULL or a profile handle not yet freed.
void fl_profile_free(struct FlProfile *profile);

// Number of grid nodes; 0 for a NULL handle.
//
// # Safety
// `profile` must be NULL or a live handle.
size_t fl_profile_len(const struct FlProfile *profile);

// Copies nodes and nodal values into caller buffers of length `len`.
// Either buffer may be NULL to skip it.
//
// # Safety
// `profile` must be a live handle; non-NULL buffers must hold `len` doubles.
enum FlStatus fl_profile_copy(const struct FlProfile *profile,
                              double *radii,
                              double *values,
                              size_t len);

// Evaluates the profile at any r > 0, using the exterior model beyond r_max.
//
// # Safety
// `profile` must be a live handle and `out` a valid pointer.
enum FlStatus fl_profile_eval(const struct FlProfile *profile, double r, double *out);

// Fits u ~ coefficient * r^{-exponent} over the nodes in [lo, hi].
//
// # Safety
// `profile` must be a live handle; `exponent` and `coefficient` valid pointers.
enum FlStatus fl_profile_fit(const struct FlProfile *profile,
                             double lo,
                             double hi,
                             double *exponent,
                             double *coefficient);

// # Safety
// `profile` must be a live handle and `out` a valid pointer.
enum FlStatus fl_profile_info(const struct FlProfile *profile, struct FlSolveInfo *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACLANE_H */
