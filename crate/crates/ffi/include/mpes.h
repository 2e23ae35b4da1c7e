#ifndef MPES_H
#define MPES_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MpesStatus {
  MPES_STATUS_OK = 0,
  MPES_STATUS_NULL_POINTER = 1,
  MPES_STATUS_INVALID_ARGUMENT = 2,
  MPES_STATUS_DOMAIN = 3,
  MPES_STATUS_DIMENSION_MISMATCH = 4,
  MPES_STATUS_NUMERIC = 5,
  MPES_STATUS_CONFIG = 6,
  MPES_STATUS_IO = 7,
  MPES_STATUS_PANIC = 8,
} MpesStatus;

typedef struct MpesConfig MpesConfig;

/**
 * One device with its own random stream.
 */
typedef struct MpesMemristor MpesMemristor;

typedef struct MpesRunResult MpesRunResult;

/**
 * Differential-pair synapse array with its own random stream.
 */
typedef struct MpesSynapseArray MpesSynapseArray;

/**
 * Power-law device parameters.
 */
typedef struct MpesDeviceParams {
  double r_zero;
  double r_one;
  double a;
  double b;
} MpesDeviceParams;

typedef struct MpesMetrics {
  double mse;
  double spearman_rho;
  double ratio;
} MpesMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *mpes_last_error(void);

struct MpesDeviceParams mpes_device_params_default(void);

/**
 * `R(n, v)`.
 *
 * # Safety
 * `out_r` must be null or point to writable memory for one `double`.
 */
enum MpesStatus mpes_resistance_after_pulses(struct MpesDeviceParams params,
                                             double n,
                                             double v,
                                             double *out_r);

/**
 * Pulse count that yields resistance `r` at voltage `v`.
 *
 * # Safety
 * `out_n` must be null or point to writable memory for one `double`.
 */
enum MpesStatus mpes_pulse_count_from_resistance(struct MpesDeviceParams params,
                                                 double r,
                                                 double v,
                                                 double *out_n);

/**
 * # Safety
 * `out_device` must be null or point to writable memory for one pointer.
 */
enum MpesStatus mpes_memristor_new(struct MpesDeviceParams params,
                                   double resistance,
                                   uint64_t seed,
                                   struct MpesMemristor **out_device);

/**
 * Applies one SET pulse. `*out_applied` is 1 when the pulse changed the
 * state and 0 when a degenerate noise draw skipped it.
 *
 * # Safety
 * `device` must come from [`mpes_memristor_new`]; `out_applied` may be null.
 */
enum MpesStatus mpes_memristor_pulse(struct MpesMemristor *device,
                                     double v,
                                     double noise_fraction,
                                     int32_t *out_applied);

/**
 * # Safety
 * `device` must come from [`mpes_memristor_new`].
 */
enum MpesStatus mpes_memristor_resistance(const struct MpesMemristor *device, double *out_r);

/**
 * # Safety
 * `device` must come from [`mpes_memristor_new`] and not be used afterwards.
 */
void mpes_memristor_free(struct MpesMemristor *device);

/**
 * Array of `n_post x n_pre` pairs initialised around `base_resistance`.
 *
 * # Safety
 * `out_array` must be null or point to writable memory for one pointer.
 */
enum MpesStatus mpes_synapse_array_new(size_t n_pre,
                                       size_t n_post,
                                       double gain,
                                       struct MpesDeviceParams params,
                                       double base_resistance,
                                       double spread,
                                       uint64_t seed,
                                       struct MpesSynapseArray **out_array);

/**
 * Pulses `M+` of pair `(post, pre)` when `positive` is nonzero, else `M-`.
 *
 * # Safety
 * `array` must come from [`mpes_synapse_array_new`].
 */
enum MpesStatus mpes_synapse_array_pulse(struct MpesSynapseArray *array,
                                         size_t post,
                                         size_t pre,
                                         int32_t positive,
                                         double v,
                                         double noise_fraction);

/**
 * Copies the row-major `n_post x n_pre` weights into `out_weights`.
 *
 * # Safety
 * `array` must come from [`mpes_synapse_array_new`]; `out_weights` must hold
 * `len` doubles.
 */
enum MpesStatus mpes_synapse_array_weights(const struct MpesSynapseArray *array,
                                           double *out_weights,
                                           size_t len);

/**
 * # Safety
 * `array` must come from [`mpes_synapse_array_new`] and not be used
 * afterwards.
 */
void mpes_synapse_array_free(struct MpesSynapseArray *array);

/**
 * Config holding the default experiment.
 */
struct MpesConfig *mpes_config_new(void);

/**
 * Applies one setting using the same keys as the config file.
 *
 * # Safety
 * `config` must come from [`mpes_config_new`]; `key` and `value` must be
 * NUL-terminated strings.
 */
enum MpesStatus mpes_config_set(struct MpesConfig *config, const char *key, const char *value);

/**
 * # Safety
 * `config` must come from [`mpes_config_new`] and not be used afterwards.
 */
void mpes_config_free(struct MpesConfig *config);

/**
 * Runs a full simulation.
 *
 * # Safety
 * `config` must come from [`mpes_config_new`]; `out_result` must be null or
 * point to writable memory for one pointer.
 */
enum MpesStatus mpes_run(const struct MpesConfig *config, struct MpesRunResult **out_result);

/**
 * # Safety
 * `result` must come from [`mpes_run`].
 */
enum MpesStatus mpes_run_metrics(const struct MpesRunResult *result,
                                 struct MpesMetrics *out_metrics);

/**
 * Number of applied SET pulses in the run.
 *
 * # Safety
 * `result` must come from [`mpes_run`].
 */
enum MpesStatus mpes_run_pulse_count(const struct MpesRunResult *result, uint64_t *out_count);

/**
 * # Safety
 * `result` must come from [`mpes_run`] and not be used afterwards.
 */
void mpes_run_result_free(struct MpesRunResult *result);

/**
 * MSE and Spearman rho of two row-major `len / dim x dim` series.
 *
 * # Safety
 * `reference` and `estimate` must each hold `len` doubles.
 */
enum MpesStatus mpes_metrics(const double *reference,
                             const double *estimate,
                             size_t len,
                             size_t dim,
                             struct MpesMetrics *out_metrics);

/**
 * Writes the `dim`-dimensional sine input at time `t` into `out_values`.
 *
 * # Safety
 * `out_values` must hold `dim` doubles.
 */
enum MpesStatus mpes_sine_signal(double t, size_t dim, double *out_values);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPES_H */
