/* C ABI for the tinysweep resource estimators.
 *
 * Conventions:
 *   - Every fallible call returns TsStatus (TS_OK = 0, errors negative);
 *     out-parameters are written only on success.
 *   - ts_last_error_message() describes the most recent failure on the
 *     calling thread; the pointer is valid until the next failing call on
 *     that thread.
 *   - Handles are released with their matching _free function; _free
 *     accepts NULL.
 */

#ifndef TINYSWEEP_H
#define TINYSWEEP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum TsStatus {
  TS_OK = 0,
  TS_NULL_ARGUMENT = -1,
  TS_INVALID_ARGUMENT = -2,
  TS_IO = -3,
  TS_FORMAT = -4,
  TS_INFERENCE = -5,
  TS_INTERNAL = -6,
} TsStatus;

/* Static footprint estimates, returned by value. */
typedef struct TsFootprintReport {
  uint64_t macs_total;
  uint64_t flash_bytes;
  uint64_t ram_bytes;
  double latency_ms;
  double energy_uj;
} TsFootprintReport;

/* Opaque handles. */
typedef struct TsModelSpec TsModelSpec;
typedef struct TsCompressedModel TsCompressedModel;
typedef struct TsDeviceProfile TsDeviceProfile;

/* Library version as a static NUL-terminated string. */
const char *ts_version(void);

/* Message describing the last error on this thread. */
const char *ts_last_error_message(void);

/* Compact separable-CNN spec for the given input shape. */
TsStatus ts_model_spec_new(uint32_t input_length,
                           uint32_t input_channels,
                           uint32_t class_count,
                           TsModelSpec **out);
void ts_model_spec_free(TsModelSpec *spec);

/* Total multiply-accumulate count for one inference. */
TsStatus ts_model_spec_macs(const TsModelSpec *spec, uint64_t *out_total);

/* Trainable parameter count (weights plus biases). */
TsStatus ts_model_spec_parameter_count(const TsModelSpec *spec, uint64_t *out_count);

/* Peak int8 activation-arena bytes. */
TsStatus ts_model_spec_arena_peak(const TsModelSpec *spec, uint64_t *out_bytes);

/* Device cost model: default EFR32xG24-class profile at 78 MHz, or parsed
 * from a profile JSON document. */
TsStatus ts_device_profile_default(TsDeviceProfile **out);
TsStatus ts_device_profile_from_json(const char *json, TsDeviceProfile **out);
void ts_device_profile_free(TsDeviceProfile *profile);

/* Compressed model files (TNYQ format). */
TsStatus ts_compressed_model_load(const char *path, TsCompressedModel **out);
void ts_compressed_model_free(TsCompressedModel *model);
TsStatus ts_compressed_model_shape(const TsCompressedModel *model,
                                   uint32_t *out_input_length,
                                   uint32_t *out_input_channels,
                                   uint32_t *out_class_count);

/* Static footprint estimates for a compressed model under a device
 * profile. */
TsStatus ts_profile(const TsCompressedModel *model,
                    const TsDeviceProfile *device,
                    TsFootprintReport *out);

/* Quantized inference on one standardized instance (row-major
 * length x channels doubles). Writes class probabilities and the argmax
 * index. */
TsStatus ts_quantized_predict(const TsCompressedModel *model,
                              const double *instance,
                              size_t instance_len,
                              double *probabilities,
                              size_t probabilities_len,
                              uint32_t *out_class);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TINYSWEEP_H */
