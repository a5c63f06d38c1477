#ifndef FCM_CRLB_H
#define FCM_CRLB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FcmStatus {
  FCM_STATUS_OK = 0,
  FCM_STATUS_NULL_POINTER = 1,
  FCM_STATUS_INVALID_ARGUMENT = 2,
  FCM_STATUS_DOMAIN = 3,
  FCM_STATUS_PRECONDITION = 4,
  FCM_STATUS_NUMERICAL = 5,
  FCM_STATUS_BUFFER_TOO_SMALL = 6,
  FCM_STATUS_PANIC = 7,
} FcmStatus;

typedef enum FcmProfile {
  FCM_PROFILE_EVA = 0,
  FCM_PROFILE_ETU = 1,
} FcmProfile;

/**
 * Opaque scenario handle.
 */
typedef struct FcmScenario FcmScenario;

typedef struct FcmComplex {
  double re;
  double im;
} FcmComplex;

/**
 * Scenario description. `pilots` may be null, in which case QPSK pilots
 * are drawn from `pilot_seed`; otherwise it must point to `n_tones`
 * unit-modulus symbols.
 */
typedef struct FcmScenarioParams {
  /**
   * One of the `FcmProfile` values.
   */
  uint32_t profile;
  size_t n_tones;
  size_t cp_len;
  double sample_period_s;
  double f_d_hz;
  double snr_db;
  uint64_t pilot_seed;
  const struct FcmComplex *pilots;
} FcmScenarioParams;

typedef struct FcmBounds {
  double omega;
  double tmse_lb;
  double avgmse_lb;
  double avgmse_lb_pilot_free;
  double avgmse_lb_insightful;
  double lambda_max;
  double c_fit;
} FcmBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Thread-local message of the last failed call on this thread; empty if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *fcm_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fcm_version(void);

/**
 * # Safety
 * `out` must be null or valid for writes.
 */
enum FcmStatus fcm_bessel_j0(double x, double *out);

/**
 * `N·J0(2π·0.35·f_dT_s)`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum FcmStatus fcm_lambda_max_fit(size_t n, double fdts, double *out);

/**
 * # Safety
 * `params` must be null or point to a valid struct whose `pilots` is null
 * or readable for `n_tones` elements; `out` must be null or valid for writes.
 */
enum FcmStatus fcm_scenario_new(const struct FcmScenarioParams *params, struct FcmScenario **out);

/**
 * Releases a scenario. Null is ignored.
 *
 * # Safety
 * `s` must be null or a handle from [`fcm_scenario_new`] not yet freed.
 */
void fcm_scenario_free(struct FcmScenario *s);

/**
 * # Safety
 * `s` must be a live handle or null; `out` null or valid for writes.
 */
enum FcmStatus fcm_scenario_n_tones(const struct FcmScenario *s, size_t *out);

/**
 * `ω = x_pᴴΩx_p` of the scenario's pilots.
 *
 * # Safety
 * `s` must be a live handle or null; `out` null or valid for writes.
 */
enum FcmStatus fcm_scenario_omega(const struct FcmScenario *s, double *out);

/**
 * Pilot symbols, `len` must be at least N.
 *
 * # Safety
 * `s` must be a live handle or null; `out` null or valid for `len` writes.
 */
enum FcmStatus fcm_scenario_pilots(const struct FcmScenario *s, struct FcmComplex *out, size_t len);

/**
 * # Safety
 * `s` must be a live handle or null; `out` null or valid for writes.
 */
enum FcmStatus fcm_scenario_bounds(const struct FcmScenario *s, size_t n_t, struct FcmBounds *out);

/**
 * Entry `((i·N+j), (k·N+l))` of the CRLB matrix.
 *
 * # Safety
 * `s` must be a live handle or null; `out` null or valid for writes.
 */
enum FcmStatus fcm_scenario_crlb_entry(const struct FcmScenario *s,
                                       size_t n_t,
                                       size_t i,
                                       size_t j,
                                       size_t k,
                                       size_t l,
                                       struct FcmComplex *out);

/**
 * True FCM in row-major order; `len` must be at least N².
 *
 * # Safety
 * `s` must be a live handle or null; `out` null or valid for `len` writes.
 */
enum FcmStatus fcm_scenario_true_fcm(const struct FcmScenario *s,
                                     struct FcmComplex *out,
                                     size_t len);

/**
 * One MLE from `n_t` model-mode LS estimates drawn with `seed`. Writes
 * the estimate row-major into `out` (`len` ≥ N²) and its AvgMSE
 * against the true FCM into `avgmse` (may be null).
 *
 * # Safety
 * `s` must be a live handle or null; `out` null or valid for `len`
 * writes; `avgmse` null or valid for writes.
 */
enum FcmStatus fcm_scenario_run_mle(const struct FcmScenario *s,
                                    size_t n_t,
                                    uint64_t seed,
                                    struct FcmComplex *out,
                                    size_t len,
                                    double *avgmse);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FCM_CRLB_H */
