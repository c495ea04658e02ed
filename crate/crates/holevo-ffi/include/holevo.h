/* C interface to the holevo estimation-bound library. */

#ifndef HOLEVO_H
#define HOLEVO_H

/* Generated by cbindgen; edit src/lib.rs instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome class of a call. Mirrors the CLI exit codes: 2 for invalid
// input, 3 for solver non-convergence, 4 for precision loss.
typedef enum HolevoStatus {
  HOLEVO_STATUS_OK = 0,
  // A required pointer argument was null.
  HOLEVO_STATUS_NULL_POINTER = 1,
  // Validation failure: shapes, domains, parse errors.
  HOLEVO_STATUS_INVALID_INPUT = 2,
  // The SDP solver stalled or found the problem infeasible.
  HOLEVO_STATUS_SOLVER_FAILURE = 3,
  // A result lost too much precision to be meaningful.
  HOLEVO_STATUS_PRECISION_FAILURE = 4,
  // A panic was caught at the boundary; state is still consistent.
  HOLEVO_STATUS_INTERNAL = 5,
} HolevoStatus;

// Opaque parametric-model point: a density matrix with its parameter
// gradients, ready for bound evaluation.
typedef struct HolevoModelPoint HolevoModelPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread. Never null.
const char *holevo_last_error_message(void);

// Builds a model point from explicit matrices.
//
// `rho` holds 2*dim*dim doubles (row-major, interleaved re/im) and
// `grads` holds `params` consecutive blocks of the same layout. On
// success `*out` owns the handle; release it with
// `holevo_model_point_free`.
//
// # Safety
// Pointers must reference buffers of the stated lengths.
enum HolevoStatus holevo_model_point_new(size_t dim,
                                         size_t params,
                                         const double *rho,
                                         const double *grads,
                                         struct HolevoModelPoint **out);

// Evaluates a builtin family (pure-qubit, qubit-bloch, qubit-spherical,
// qubit-r-theta, phase:B) at `point`, or at the family default when
// `point` is null.
//
// # Safety
// `name` must be a NUL-terminated string; `point`, when non-null, must
// hold `point_len` doubles.
enum HolevoStatus holevo_model_point_builtin(const char *name,
                                             const double *point,
                                             size_t point_len,
                                             struct HolevoModelPoint **out);

// Releases a model point. Null is a no-op.
//
// # Safety
// `pt` must be a pointer returned by a constructor, freed at most once.
void holevo_model_point_free(struct HolevoModelPoint *pt);

// Hilbert-space dimension of the point; 0 for null.
//
// # Safety
// `pt` must be null or a live handle.
size_t holevo_model_point_dim(const struct HolevoModelPoint *pt);

// Parameter count of the point; 0 for null.
//
// # Safety
// `pt` must be null or a live handle.
size_t holevo_model_point_params(const struct HolevoModelPoint *pt);

// SLD Cramer-Rao bound trace(C F^{-1}).
//
// # Safety
// `cost` must hold p*p doubles (row-major) for p parameters.
enum HolevoStatus holevo_sld_bound(const struct HolevoModelPoint *pt,
                                   const double *cost,
                                   double *out);

// RLD bound; fails with InvalidInput on rank-deficient states.
//
// # Safety
// `cost` must hold p*p doubles (row-major) for p parameters.
enum HolevoStatus holevo_rld_bound(const struct HolevoModelPoint *pt,
                                   const double *cost,
                                   double *out);

// Hayashi-Gill-Massar separable-measurement bound (qubit models only).
//
// # Safety
// `cost` must hold p*p doubles (row-major) for p parameters.
enum HolevoStatus holevo_hgm_bound(const struct HolevoModelPoint *pt,
                                   const double *cost,
                                   double *out);

// Holevo Cramer-Rao bound by semidefinite programming. `gap_tol <= 0`
// selects the default solver tolerance.
//
// # Safety
// `cost` must hold p*p doubles (row-major) for p parameters.
enum HolevoStatus holevo_hcr_bound(const struct HolevoModelPoint *pt,
                                   const double *cost,
                                   double gap_tol,
                                   double *out);

// Holevo bound of a Gaussian shift model with encoding `a` (r x p,
// row-major, r = 2*q_modes + c_vars), covariance `v` (r x r), and cost
// `cost` (p x p).
//
// # Safety
// The arrays must have the stated shapes.
enum HolevoStatus holevo_gaussian_hcr(size_t q_modes,
                                      size_t c_vars,
                                      size_t params,
                                      const double *a,
                                      const double *v,
                                      const double *cost,
                                      double *out);

// Asymptotic Bures-weighted limit cost for an i.i.d. qudit spectrum
// (strictly decreasing, positive, summing to 1).
//
// # Safety
// `spectrum` must hold `d` doubles.
enum HolevoStatus holevo_lam_bures(const double *spectrum, size_t d, double *out);

// Asymptotic Frobenius-weighted limit cost; see `holevo_lam_bures`.
//
// # Safety
// `spectrum` must hold `d` doubles.
enum HolevoStatus holevo_lam_frobenius(const double *spectrum, size_t d, double *out);

// Exact optimal Bayesian fidelity cost for n copies of a uniformly
// distributed pure qubit: 4 / (n + 2).
//
// # Safety
// `out` must be a valid pointer.
enum HolevoStatus holevo_covariant_pure_cost(size_t n, double *out);

// Seed-deterministic Monte-Carlo run of the collective (r, theta)
// protocol on n qubit copies; writes the n-scaled mean cost and its
// standard error.
//
// # Safety
// `out_cost` and `out_stderr` must be valid pointers.
enum HolevoStatus holevo_collective_run(size_t n,
                                        double r,
                                        double theta,
                                        double c,
                                        size_t trials,
                                        uint64_t seed,
                                        double *out_cost,
                                        double *out_stderr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOLEVO_H */
