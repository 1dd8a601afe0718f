#ifndef LANDMOD_H
#define LANDMOD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Shape applied above the threshold.
typedef enum LmFamily {
  // Plain Metropolis-Hastings.
  LM_FAMILY_ZERO = 0,
  LM_FAMILY_LINEAR = 1,
  LM_FAMILY_QUADRATIC = 2,
  LM_FAMILY_SQUARE_ROOT = 3,
} LmFamily;

// Result code of every call.
typedef enum LmStatus {
  LM_STATUS_OK = 0,
  LM_STATUS_NULL_POINTER = 1,
  LM_STATUS_INVALID_ARGUMENT = 2,
  LM_STATUS_CONFIG = 3,
  LM_STATUS_DOMAIN = 4,
  LM_STATUS_PRECONDITION = 5,
  LM_STATUS_STRUCTURE = 6,
  LM_STATUS_NUMERICAL = 7,
  LM_STATUS_RANGE = 8,
  LM_STATUS_IO = 9,
  LM_STATUS_PANIC = 10,
} LmStatus;

// Opaque generator handle.
typedef struct LmGenerator LmGenerator;

// Opaque landscape handle.
typedef struct LmLandscape LmLandscape;

// Transform parameters: shape, threshold `c` and temperature `epsilon`.
typedef struct LmTransform {
  enum LmFamily family;
  double c;
  double epsilon;
} LmTransform;

typedef struct LmCriticalHeights {
  double h0;
  double hf;
  double c_star;
} LmCriticalHeights;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL after a success.
// The pointer stays valid until the next call on the same thread.
const char *lm_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *lm_version(void);

// Landscape on `n` states with undirected edges `(from[k], to[k])` of proposal
// rate `rate[k]` from `from[k]`; the reverse rate follows from detailed balance.
// `mu` may be NULL for the uniform law.
//
// # Safety
// `energies` (and `mu` when non-NULL) must hold `n` values, the edge arrays
// `n_edges` values, and `out` must be writable.
enum LmStatus lm_landscape_new(uintptr_t n,
                               const double *energies,
                               const double *mu,
                               uintptr_t n_edges,
                               const uintptr_t *from,
                               const uintptr_t *to,
                               const double *rate,
                               struct LmLandscape **out_landscape);

// Path `0 - 1 - ... - n-1` with unit rates and uniform law.
//
// # Safety
// `energies` must hold `n` values and `out_landscape` must be writable.
enum LmStatus lm_landscape_path(uintptr_t n,
                                const double *energies,
                                struct LmLandscape **out_landscape);

// Reads a landscape file (`n`, then `index energy mu` lines, then `x y rate` edges).
//
// # Safety
// `path` must be a NUL-terminated string and `out_landscape` writable.
enum LmStatus lm_landscape_load(const char *path, struct LmLandscape **out_landscape);

// Releases a landscape. NULL is ignored.
//
// # Safety
// `landscape` must come from this API and not be used afterwards.
void lm_landscape_free(struct LmLandscape *landscape);

// # Safety
// `landscape` must be a live handle and `out_n` writable.
enum LmStatus lm_landscape_size(const struct LmLandscape *landscape, uintptr_t *out_n);

// Modified energy gap `H^f(y) - H^f(x)` between levels `hx` and `hy`, in units
// where the acceptance probability is `exp(-max(gap, 0))`.
//
// # Safety
// `out_gap` must be writable.
enum LmStatus lm_modified_gap(struct LmTransform transform, double hx, double hy, double *out_gap);

// Metropolis acceptance probability of a move from level `hx` to `hy`.
//
// # Safety
// `out_probability` must be writable.
enum LmStatus lm_acceptance_probability(struct LmTransform transform,
                                        double hx,
                                        double hy,
                                        double *out_probability);

// Classical `H0`, modified `Hf` and clipped `c*` critical heights.
//
// # Safety
// `landscape` must be a live handle and `out_heights` writable.
enum LmStatus lm_critical_heights(const struct LmLandscape *landscape,
                                  struct LmTransform transform,
                                  struct LmCriticalHeights *out_heights);

// Metropolis-Hastings generator of the modified landscape.
//
// # Safety
// `landscape` must be a live handle and `out_generator` writable.
enum LmStatus lm_generator_build(const struct LmLandscape *landscape,
                                 struct LmTransform transform,
                                 struct LmGenerator **out_generator);

// Releases a generator. NULL is ignored.
//
// # Safety
// `generator` must come from this API and not be used afterwards.
void lm_generator_free(struct LmGenerator *generator);

// # Safety
// `generator` must be a live handle and `out_n` writable.
enum LmStatus lm_generator_size(const struct LmGenerator *generator, uintptr_t *out_n);

// Copies the stationary law into `out_pi`, which must hold `len` values with
// `len` equal to the number of states.
//
// # Safety
// `generator` must be a live handle and `out_pi` writable for `len` values.
enum LmStatus lm_generator_stationary(const struct LmGenerator *generator,
                                      double *out_pi,
                                      uintptr_t len);

// Smallest non-zero eigenvalue of `-M`.
//
// # Safety
// `generator` must be a live handle and `out_gap` writable.
enum LmStatus lm_spectral_gap(const struct LmGenerator *generator, double *out_gap);

// First time the worst-case total-variation distance drops below `threshold`.
//
// # Safety
// `generator` must be a live handle and `out_time` writable.
enum LmStatus lm_mixing_time(const struct LmGenerator *generator,
                             double threshold,
                             double *out_time);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LANDMOD_H */
