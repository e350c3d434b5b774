#ifndef BEAMRM_H
#define BEAMRM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BeamrmMethod {
  BEAMRM_METHOD_PROPOSED = 0,
  BEAMRM_METHOD_LASSO = 1,
  BEAMRM_METHOD_MP = 2,
  BEAMRM_METHOD_OMP = 3,
  BEAMRM_METHOD_PEAK = 4,
} BeamrmMethod;

typedef enum BeamrmCriterion {
  BEAMRM_CRITERION_BIC = 0,
  BEAMRM_CRITERION_AIC = 1,
  BEAMRM_CRITERION_GLRT = 2,
} BeamrmCriterion;

typedef enum BeamrmStatus {
  BEAMRM_STATUS_OK = 0,
  BEAMRM_STATUS_NULL_POINTER = 1,
  BEAMRM_STATUS_INVALID_CONFIG = 2,
  BEAMRM_STATUS_PARSE = 3,
  BEAMRM_STATUS_GENERATION = 4,
  BEAMRM_STATUS_NUMERIC = 5,
  BEAMRM_STATUS_IO = 6,
  BEAMRM_STATUS_BUFFER_TOO_SMALL = 7,
  BEAMRM_STATUS_PANIC = 8,
} BeamrmStatus;

/**
 * Opaque estimate handle.
 */
typedef struct BeamrmEstimate BeamrmEstimate;

/**
 * Opaque scenario handle.
 */
typedef struct BeamrmScenario BeamrmScenario;

/**
 * Scenario settings. Obtain defaults from [`beamrm_scenario_config_default`].
 */
typedef struct BeamrmScenarioConfig {
  size_t m;
  size_t n;
  size_t k;
  double snr_db;
  double beta_min_deg;
  double beta_max_deg;
  double region_size_m;
  double sat_altitude_m;
  uint64_t seed;
  double center_lat_deg;
  double center_lon_deg;
  double psi_max_deg;
  size_t m_min;
} BeamrmScenarioConfig;

typedef struct BeamrmEstimateOptions {
  enum BeamrmMethod method;
  enum BeamrmCriterion criterion;
  double alpha;
  size_t q;
  size_t k_max;
} BeamrmEstimateOptions;

typedef struct BeamrmBeamParams {
  double az0_deg;
  double el0_deg;
  double beta_deg;
  double amplitude;
} BeamrmBeamParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if the last call
 * succeeded. Valid until the next call on the same thread.
 */
const char *beamrm_last_error(void);

struct BeamrmScenarioConfig beamrm_scenario_config_default(void);

struct BeamrmEstimateOptions beamrm_estimate_options_default(void);

/**
 * # Safety
 * `config` must point to a valid config and `out` to writable storage.
 */
enum BeamrmStatus beamrm_scenario_generate(const struct BeamrmScenarioConfig *config,
                                           struct BeamrmScenario **out);

/**
 * Parses a scenario document.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` writable.
 */
enum BeamrmStatus beamrm_scenario_from_json(const char *json, struct BeamrmScenario **out);

/**
 * Serializes a scenario. Free the string with [`beamrm_string_free`].
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum BeamrmStatus beamrm_scenario_to_json(const struct BeamrmScenario *scenario, char **out);

/**
 * Number of measurements, or 0 for a null handle.
 *
 * # Safety
 * `scenario` must be null or a live handle.
 */
size_t beamrm_scenario_measurement_count(const struct BeamrmScenario *scenario);

/**
 * Copies station latitude, longitude and linear RSS into arrays of length
 * `len`, which must be at least the measurement count.
 *
 * # Safety
 * The arrays must hold `len` writable doubles each.
 */
enum BeamrmStatus beamrm_scenario_measurements(const struct BeamrmScenario *scenario,
                                               double *lat_deg,
                                               double *lon_deg,
                                               double *rss,
                                               size_t len);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void beamrm_scenario_free(struct BeamrmScenario *scenario);

/**
 * Runs an estimator on a scenario. A null `options` uses
 * [`beamrm_estimate_options_default`].
 *
 * # Safety
 * `scenario` must be a live handle, `options` null or valid, `out` writable.
 */
enum BeamrmStatus beamrm_estimate(const struct BeamrmScenario *scenario,
                                  const struct BeamrmEstimateOptions *options,
                                  struct BeamrmEstimate **out);

/**
 * Parses an estimate document.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` writable.
 */
enum BeamrmStatus beamrm_estimate_from_json(const char *json, struct BeamrmEstimate **out);

/**
 * Estimated model order, or 0 for a null handle.
 *
 * # Safety
 * `estimate` must be null or a live handle.
 */
size_t beamrm_estimate_k_hat(const struct BeamrmEstimate *estimate);

/**
 * Copies the selected candidate indices into `out` (capacity `cap`).
 *
 * # Safety
 * `out` must hold `cap` writable entries.
 */
enum BeamrmStatus beamrm_estimate_selected(const struct BeamrmEstimate *estimate,
                                           size_t *out,
                                           size_t cap);

/**
 * Copies the beam parameters, aligned with the selected indices.
 *
 * # Safety
 * `out` must hold `cap` writable entries.
 */
enum BeamrmStatus beamrm_estimate_params(const struct BeamrmEstimate *estimate,
                                         struct BeamrmBeamParams *out,
                                         size_t cap);

/**
 * Evaluates the estimated radio map at `n` ground points.
 *
 * # Safety
 * `lat_deg`, `lon_deg` and `out` must each hold `n` doubles.
 */
enum BeamrmStatus beamrm_estimate_synthesize(const struct BeamrmEstimate *estimate,
                                             const double *lat_deg,
                                             const double *lon_deg,
                                             size_t n,
                                             double *out);

/**
 * Serializes an estimate. Free the string with [`beamrm_string_free`].
 *
 * # Safety
 * `estimate` must be a live handle and `out` writable.
 */
enum BeamrmStatus beamrm_estimate_to_json(const struct BeamrmEstimate *estimate, char **out);

/**
 * # Safety
 * `estimate` must be null or a handle not yet freed.
 */
void beamrm_estimate_free(struct BeamrmEstimate *estimate);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void beamrm_string_free(char *s);

/**
 * Normalized gain (peak 1, amplitude ignored) of a beam toward a body-frame
 * look direction.
 *
 * # Safety
 * `params` must point to valid parameters.
 */
enum BeamrmStatus beamrm_beam_gain(double look_az_deg,
                                   double look_el_deg,
                                   const struct BeamrmBeamParams *params,
                                   double *out);

/**
 * Quantile of the F(d1, d2) distribution at `prob`.
 *
 * # Safety
 * `out` must be writable.
 */
enum BeamrmStatus beamrm_f_quantile(size_t d1, size_t d2, double prob, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEAMRM_H */
