#ifndef ACN_BOUNDS_H
#define ACN_BOUNDS_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AcnBound {
  ACN_BOUND_COUNTING = 0,
  ACN_BOUND_TRILEMMA = 1,
  ACN_BOUND_DROPPING = 2,
} AcnBound;

typedef enum AcnSetting {
  ACN_SETTING_SYNC = 0,
  ACN_SETTING_UNSYNC_IMPROVED = 1,
  ACN_SETTING_UNSYNC_ORIGINAL = 2,
} AcnSetting;

typedef enum AcnStatus {
  ACN_STATUS_OK = 0,
  ACN_STATUS_INVALID_INPUT = 1,
  ACN_STATUS_CONFIG = 2,
  ACN_STATUS_CAPABILITY_VIOLATION = 3,
  ACN_STATUS_RESOURCE_LIMIT = 4,
  ACN_STATUS_NOT_FOUND = 5,
  ACN_STATUS_NULL_POINTER = 6,
  ACN_STATUS_PANIC = 7,
} AcnStatus;

typedef enum AcnVerdict {
  ACN_VERDICT_IMPOSSIBLE = 0,
  ACN_VERDICT_POSSIBLE = 1,
  ACN_VERDICT_NOT_APPLICABLE = 2,
} AcnVerdict;

/**
 * Opaque protocol parameters.
 */
typedef struct AcnParams AcnParams;

/**
 * Message for the most recent failure on this thread, or an empty string.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *acn_last_error(void);

/**
 * New parameters for `n` users and latency `l_max`, with no extra traffic.
 * Release with [`acn_params_free`].
 */
struct AcnParams *acn_params_new(uint32_t n, uint32_t l_max);

/**
 * # Safety
 * `params` must be null or come from [`acn_params_new`] and not be freed yet.
 */
void acn_params_free(struct AcnParams *params);

/**
 * Dummy rate; keeps the total sending probability as set.
 *
 * # Safety
 * `params` must be a live handle from [`acn_params_new`].
 */
enum AcnStatus acn_params_set_beta(struct AcnParams *params, double beta);

/**
 * Total sending probability, real plus dummy.
 *
 * # Safety
 * `params` must be a live handle from [`acn_params_new`].
 */
enum AcnStatus acn_params_set_p(struct AcnParams *params, double p);

/**
 * # Safety
 * `params` must be a live handle from [`acn_params_new`].
 */
enum AcnStatus acn_params_set_l_exp(struct AcnParams *params, double l_exp);

/**
 * Number of relays.
 *
 * # Safety
 * `params` must be a live handle from [`acn_params_new`].
 */
enum AcnStatus acn_params_set_k(struct AcnParams *params, uint32_t k);

/**
 * # Safety
 * `params` must be a live handle from [`acn_params_new`].
 */
enum AcnStatus acn_params_set_threshold(struct AcnParams *params, uint32_t threshold);

/**
 * # Safety
 * `params` must be a live handle from [`acn_params_new`].
 */
enum AcnStatus acn_params_set_copies(struct AcnParams *params, uint32_t copies);

/**
 * # Safety
 * `params` must be a live handle from [`acn_params_new`].
 */
enum AcnStatus acn_params_set_rounds(struct AcnParams *params, uint32_t rounds);

/**
 * Timing-attack lower bound without compromised relays.
 *
 * # Safety
 * `out_delta` must be null or point to writable memory for one `double`.
 */
enum AcnStatus acn_trilemma_advantage(enum AcnSetting setting,
                                      uint32_t l_max,
                                      double beta,
                                      double p,
                                      uint32_t n,
                                      double *out_delta);

/**
 * Lower bound with `c_p` of `k` relays compromised; `x` is `beta` for the
 * synchronized setting and `p` otherwise.
 *
 * # Safety
 * `out_delta` must be null or point to writable memory for one `double`.
 */
enum AcnStatus acn_trilemma_compromising(enum AcnSetting setting,
                                         uint32_t l_max,
                                         double x,
                                         uint32_t n,
                                         uint32_t c_p,
                                         uint32_t k,
                                         double *out_delta);

/**
 * Minimum number of packets for `out_r` deliveries among `h` honest senders.
 *
 * # Safety
 * `out_min_com` must be null or point to writable memory for one `uint64_t`.
 */
enum AcnStatus acn_counting_min_com(uint64_t out_r, uint64_t h, uint64_t *out_min_com);

/**
 * Classifies a parameter point against one bound. `out_threshold` receives
 * NaN when the bound has no threshold at this point. Dropping uses log base 2.
 *
 * # Safety
 * Both out-pointers must be null or writable.
 */
enum AcnStatus acn_region(enum AcnBound bound,
                          uint32_t l_max,
                          double beta,
                          double p,
                          uint32_t n,
                          uint32_t c_p,
                          double lambda,
                          double poly,
                          enum AcnVerdict *out_verdict,
                          double *out_threshold);

/**
 * Runs a simulated game and returns its result record as JSON in `*out_json`.
 * `notion` may be null for `SO`. The adversary observes every sender link
 * and the receiver; dropping attacks also get active control.
 *
 * # Safety
 * `params` must be a live handle; string arguments must be null or
 * NUL-terminated; `out_json` must be writable. Free the result with
 * [`acn_string_free`].
 */
enum AcnStatus acn_simulate_json(const struct AcnParams *params,
                                 const char *protocol,
                                 const char *attack,
                                 const char *notion,
                                 uint32_t c_p,
                                 uint32_t c_a,
                                 uint64_t trials,
                                 uint64_t seed,
                                 char **out_json);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed at most once.
 */
void acn_string_free(char *s);

#endif  /* ACN_BOUNDS_H */
