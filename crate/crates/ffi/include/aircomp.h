#ifndef AIRCOMP_H
#define AIRCOMP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum AcStatus {
  AC_STATUS_OK = 0,
  AC_STATUS_NULL_POINTER = 1,
  AC_STATUS_INVALID_ARGUMENT = 2,
  AC_STATUS_DIMENSION_MISMATCH = 3,
  AC_STATUS_DEGENERATE = 4,
  AC_STATUS_SOLVER = 5,
  AC_STATUS_CONFIG = 6,
  AC_STATUS_IO = 7,
  AC_STATUS_INTERNAL = 8,
  AC_STATUS_PANIC = 9,
} AcStatus;

/**
 * Channel vectors of all devices.
 */
typedef struct AcChannels AcChannels;

/**
 * A transceiver: beamformer half, steering powers and ZF precoders.
 */
typedef struct AcDesign AcDesign;

/**
 * One design problem: a transmitted feature pair, channels and devices.
 */
typedef struct AcProblem AcProblem;

/**
 * Class statistics: centroids and per-dimension variances.
 */
typedef struct AcStats AcStats;

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ac_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void ac_string_free(char *s);

/**
 * `centroids` is `classes x dims`, `variances` has `dims` entries.
 *
 * # Safety
 * Buffers must hold the stated number of doubles; `out` must be writable.
 */
enum AcStatus ac_stats_new(size_t classes,
                           size_t dims,
                           const double *centroids,
                           const double *variances,
                           struct AcStats **out);

/**
 * Parses `{"L":..,"M":..,"centroids":[[..]],"variances":[..]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum AcStatus ac_stats_from_json(const char *json, struct AcStats **out);

/**
 * Discriminant gain of the listed (zero-based) dimensions.
 *
 * # Safety
 * `stats` must be a live handle; `dims` must hold `count` entries.
 */
enum AcStatus ac_stats_total_gain(const struct AcStats *stats,
                                  const size_t *dims,
                                  size_t count,
                                  double *out);

/**
 * # Safety
 * `stats` must be NULL or a handle from this library, freed once.
 */
void ac_stats_free(struct AcStats *stats);

/**
 * `re` and `im` are `devices x antennas`.
 *
 * # Safety
 * Buffers must hold `devices * antennas` doubles; `out` must be writable.
 */
enum AcStatus ac_channels_new(size_t devices,
                              size_t antennas,
                              const double *re,
                              const double *im,
                              struct AcChannels **out);

/**
 * # Safety
 * `channels` must be NULL or a handle from this library, freed once.
 */
void ac_channels_free(struct AcChannels *channels);

/**
 * Builds a problem for the feature pair `dims` (one or two entries).
 * `sensing_noise` holds `eps_k^2` and `transmit_power` watts, one per device.
 *
 * # Safety
 * Handles must be live; arrays must hold the stated counts; `out` must be writable.
 */
enum AcStatus ac_problem_new(const struct AcStats *stats,
                             const size_t *dims,
                             size_t dim_count,
                             const struct AcChannels *channels,
                             const double *sensing_noise,
                             const double *transmit_power,
                             double noise_power,
                             struct AcProblem **out);

/**
 * # Safety
 * `problem` must be NULL or a handle from this library, freed once.
 */
void ac_problem_free(struct AcProblem *problem);

/**
 * Runs the SCA design. `max_iter == 0` or `rel_tol <= 0` keep the defaults
 * (100 and 1e-5). `iterations` may be NULL.
 *
 * # Safety
 * `problem` must be live; `out` must be writable.
 */
enum AcStatus ac_optimize(const struct AcProblem *problem,
                          size_t max_iter,
                          double rel_tol,
                          struct AcDesign **out,
                          size_t *iterations);

/**
 * Channel-equalizing baseline.
 *
 * # Safety
 * `problem` must be live; `out` must be writable.
 */
enum AcStatus ac_baseline_mmse_centroid(const struct AcProblem *problem, struct AcDesign **out);

/**
 * Random-beamformer baseline, reproducible for a given `seed`.
 *
 * # Safety
 * `problem` must be live; `out` must be writable.
 */
enum AcStatus ac_baseline_random(const struct AcProblem *problem,
                                 uint64_t seed,
                                 struct AcDesign **out);

/**
 * Achieved discriminant gain of `design` on `problem`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum AcStatus ac_received_gain(const struct AcProblem *problem,
                               const struct AcDesign *design,
                               double *out);

/**
 * Number of devices in `design`, or 0 for NULL.
 *
 * # Safety
 * `design` must be NULL or live.
 */
size_t ac_design_devices(const struct AcDesign *design);

/**
 * Number of receive antennas in `design`, or 0 for NULL.
 *
 * # Safety
 * `design` must be NULL or live.
 */
size_t ac_design_antennas(const struct AcDesign *design);

/**
 * Copies the real beamformer half `f_hat` (`len` = antennas).
 *
 * # Safety
 * `design` must be live; `buf` must hold `len` doubles.
 */
enum AcStatus ac_design_f_hat(const struct AcDesign *design, double *buf, size_t len);

/**
 * Copies the steering powers (`len` = devices).
 *
 * # Safety
 * `design` must be live; `buf` must hold `len` doubles.
 */
enum AcStatus ac_design_steering(const struct AcDesign *design, double *buf, size_t len);

/**
 * Copies the ZF precoders as separate real and imaginary parts (`len` = devices).
 *
 * # Safety
 * `design` must be live; `re` and `im` must hold `len` doubles.
 */
enum AcStatus ac_design_precoders(const struct AcDesign *design,
                                  double *re,
                                  double *im,
                                  size_t len);

/**
 * `{"f_hat":[..],"c":[..],"b_re":[..],"b_im":[..]}`.
 *
 * # Safety
 * `design` must be live; `out` must be writable.
 */
enum AcStatus ac_design_to_json(const struct AcDesign *design, char **out);

/**
 * # Safety
 * `design` must be NULL or a handle from this library, freed once.
 */
void ac_design_free(struct AcDesign *design);

/**
 * Runs the experiment described by a JSON config and returns its CSV report.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `csv_out` must be writable.
 */
enum AcStatus ac_run_experiment(const char *config_json, char **csv_out);

#endif  /* AIRCOMP_H */
