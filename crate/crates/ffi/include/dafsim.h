#ifndef DAFSIM_H
#define DAFSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DafStatus {
  DAF_STATUS_OK = 0,
  DAF_STATUS_NULL_POINTER = 1,
  // An argument is outside its domain.
  DAF_STATUS_DOMAIN = 2,
  // A buffer or sequence is too short.
  DAF_STATUS_LENGTH = 3,
  // Invalid settings, such as a zero frame length.
  DAF_STATUS_CONFIG = 4,
  // The library panicked; this is a bug.
  DAF_STATUS_INTERNAL = 5,
} DafStatus;

typedef enum DafCombiner {
  DAF_COMBINER_SELECTION = 0,
  DAF_COMBINER_SEMI_MRC = 1,
  DAF_COMBINER_DIRECT_ONLY = 2,
} DafCombiner;

typedef enum DafGenerator {
  DAF_GENERATOR_SUM_OF_SINUSOIDS = 0,
  DAF_GENERATOR_AR1 = 1,
} DafGenerator;

// Opaque channel description: three link variances, three normalized
// Doppler rates and the symbol spacing.
typedef struct DafChannel DafChannel;

typedef struct DafBerBreakdown {
  double i1;
  double i2;
  double i3;
  double total;
} DafBerBreakdown;

typedef struct DafQOptimum {
  double q;
  double ber;
} DafQOptimum;

typedef struct DafMcOptions {
  uint64_t min_bit_errors;
  uint64_t max_bits;
  size_t frame_length;
  uint64_t seed;
  enum DafCombiner combiner;
  size_t relays;
  enum DafGenerator generator;
  // Worker threads; 0 reads `DAF_THREADS`, then uses all cores.
  size_t threads;
  bool noiseless;
} DafMcOptions;

typedef struct DafBerReport {
  uint64_t bits;
  uint64_t errors;
  double ber;
  double confidence_radius_95;
  // NaN when no closed form applies.
  double theory_ber;
  // NaN when no closed form applies.
  double floor;
  bool below_resolution;
  bool budget_exhausted;
} DafBerReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string. The
// pointer stays valid until the next failing call on the same thread.
const char *daf_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *daf_version(void);

// Creates a channel handle.
//
// # Safety
//
// `sigma2` and `doppler` must each point to three readable doubles and
// `out` must be valid for a pointer write. On success `*out` owns a handle
// that must be passed to [`daf_channel_free`] exactly once.
enum DafStatus daf_channel_new(const double *sigma2,
                               const double *doppler,
                               uint32_t spacing,
                               struct DafChannel **out);

// Releases a channel handle. Null is ignored.
//
// # Safety
//
// `channel` must be null or a handle from [`daf_channel_new`] that has not
// been freed.
void daf_channel_free(struct DafChannel *channel);

// Lag-spacing correlation coefficients of the direct link and the cascaded
// relay link.
//
// # Safety
//
// `channel` must be a live handle; `alpha0` and `alpha` must be valid for
// a double write.
enum DafStatus daf_channel_correlations(const struct DafChannel *channel,
                                        double *alpha0,
                                        double *alpha);

// Averaged BER of selection combining with one relay.
//
// # Safety
//
// `channel` must be a live handle and `out` valid for a write.
enum DafStatus daf_ber_closed_form(const struct DafChannel *channel,
                                   double p_over_n0_db,
                                   double q,
                                   struct DafBerBreakdown *out);

// BER limit as the power grows without bound.
//
// # Safety
//
// `channel` must be a live handle and `out` valid for a write.
enum DafStatus daf_error_floor(const struct DafChannel *channel,
                               double q,
                               struct DafBerBreakdown *out);

// Power allocation factor minimizing the closed-form BER.
//
// # Safety
//
// `channel` must be a live handle and `out` valid for a write.
enum DafStatus daf_optimize_q(const struct DafChannel *channel,
                              double p_over_n0_db,
                              struct DafQOptimum *out);

// Default Monte Carlo settings.
struct DafMcOptions daf_mc_options_default(void);

// Monte Carlo BER estimate. A report with `budget_exhausted` set is still
// `DAF_STATUS_OK`.
//
// # Safety
//
// `channel` must be a live handle, `options` null (defaults) or readable,
// and `out` valid for a write.
enum DafStatus daf_simulate(const struct DafChannel *channel,
                            double p_over_n0_db,
                            double q,
                            const struct DafMcOptions *options,
                            struct DafBerReport *out);

// Bessel function of the first kind, order zero.
//
// # Safety
//
// `out` must be valid for a write.
enum DafStatus daf_bessel_j0(double x, double *out);

// `e^x E1(x)` for `x > 0`.
//
// # Safety
//
// `out` must be valid for a write.
enum DafStatus daf_exp_scaled_e1(double x, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DAFSIM_H */
