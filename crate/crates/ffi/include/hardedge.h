#ifndef HARDEDGE_H
#define HARDEDGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Counting convention of the Riccati estimator.
 */
typedef enum HeCountMode {
  HE_COUNT_MODE_ZEROS = 0,
  HE_COUNT_MODE_EXPLOSIONS = 1,
} HeCountMode;

/**
 * Status codes returned by every function.
 */
typedef enum HeStatus {
  HE_STATUS_OK = 0,
  /**
   * A parameter is outside the domain of the operation.
   */
  HE_STATUS_DOMAIN = 1,
  /**
   * A solver missed its accuracy or sanity checks.
   */
  HE_STATUS_SOLVER = 2,
  /**
   * Internal invariant failure.
   */
  HE_STATUS_INTERNAL = 3,
  /**
   * File or serialization failure.
   */
  HE_STATUS_IO = 4,
  /**
   * A required pointer argument was null.
   */
  HE_STATUS_NULL_POINTER = 5,
  /**
   * A Rust panic was caught.
   */
  HE_STATUS_PANIC = 6,
} HeStatus;

/**
 * Solved PDE chain `F_0..F_k`.
 */
typedef struct HePde HePde;

/**
 * A vector of samples.
 */
typedef struct HeSamples HeSamples;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message of this thread, or null if none. Valid until the next
 * failing call on the same thread.
 */
const char *he_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *he_version(void);

/**
 * Riccati Monte Carlo estimate of `F_k(μ, c)` for rank one; `c` may be
 * `INFINITY`.
 *
 * # Safety
 * `estimate` and `se` must be valid for writes.
 */
enum HeStatus he_riccati_f1(double beta,
                            double a,
                            size_t k,
                            double mu,
                            double c,
                            size_t n_paths,
                            enum HeCountMode mode,
                            uint64_t seed,
                            double *estimate,
                            double *se);

/**
 * Limiting β = 2 Fredholm determinant `det(I − K)` on `[0, t]` for spikes
 * `c[0..r]`.
 *
 * # Safety
 * `c` must point to `r` readable values; `det` must be valid for writes.
 */
enum HeStatus he_fredholm_limit_det(double t, uint32_t a, const double *c, size_t r, double *det);

/**
 * `P(λ_min > t)` for the complex `r × (r + a)` Wishart matrix.
 *
 * # Safety
 * `det` must be valid for writes.
 */
enum HeStatus he_laguerre_det(double t, size_t r, uint32_t a, double *det);

/**
 * Draw `count` samples of `n λ_min` from the one-spike model with
 * `σ = c/n` (`c = INFINITY` gives `σ = 1`).
 *
 * # Safety
 * `out` must be valid for writes; the handle is released by
 * [`he_samples_free`].
 */
enum HeStatus he_finite_n_samples(size_t n,
                                  double a,
                                  double beta,
                                  double c,
                                  size_t count,
                                  uint64_t seed,
                                  struct HeSamples **out);

/**
 * Number of samples held by the handle.
 *
 * # Safety
 * `s` must be a live handle; `len` must be valid for writes.
 */
enum HeStatus he_samples_len(const struct HeSamples *s, size_t *len);

/**
 * Copy up to `cap` samples into `buf`; `written` receives the count.
 *
 * # Safety
 * `s` must be a live handle, `buf` writable for `cap` values.
 */
enum HeStatus he_samples_copy(const struct HeSamples *s, double *buf, size_t cap, size_t *written);

/**
 * Release a sample handle. Null is ignored.
 *
 * # Safety
 * `s` must be null or a handle not yet freed.
 */
void he_samples_free(struct HeSamples *s);

/**
 * Solve the rank-one PDE chain `F_0..F_k` on the default grid with
 * `n_mu` μ-steps and `n_c` c-nodes (0 keeps the default).
 *
 * # Safety
 * `out` must be valid for writes; release with [`he_pde_free`].
 */
enum HeStatus he_pde_solve(double beta,
                           double a,
                           size_t k,
                           size_t n_mu,
                           size_t n_c,
                           struct HePde **out);

/**
 * Interpolated `F_j(μ, c)` for `j ≤ k` of the solved chain.
 *
 * # Safety
 * `p` must be a live handle; `value` must be valid for writes.
 */
enum HeStatus he_pde_probe(const struct HePde *p, size_t j, double mu, double c, double *value);

/**
 * Release a PDE handle. Null is ignored.
 *
 * # Safety
 * `p` must be null or a handle not yet freed.
 */
void he_pde_free(struct HePde *p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARDEDGE_H */
