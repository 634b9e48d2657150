#ifndef RELAY_TREE_H
#define RELAY_TREE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RtRegion {
  RT_REGION_OUTSIDE_DOMAIN = 0,
  RT_REGION_U_OUTSIDE_R = 1,
  RT_REGION_RU_OUTSIDE_B1 = 2,
  RT_REGION_B1 = 3,
  RT_REGION_L_OUTSIDE_R = 4,
  RT_REGION_RL_OUTSIDE_B1_MIRROR = 5,
  RT_REGION_B1_MIRROR = 6,
  /**
   * Region geometry undefined (`q = 1`).
   */
  RT_REGION_UNDEFINED = 7,
} RtRegion;

typedef enum RtRule {
  RT_RULE_OR = 0,
  RT_RULE_AND = 1,
} RtRule;

/**
 * Status codes returned by every fallible call.
 */
typedef enum RtStatus {
  RT_STATUS_OK = 0,
  RT_STATUS_NULL_POINTER = 1,
  /**
   * A value was outside its admissible range.
   */
  RT_STATUS_RANGE = 2,
  /**
   * `alpha + beta >= 1`.
   */
  RT_STATUS_DOMAIN = 3,
  /**
   * `q = 1` where region geometry is undefined.
   */
  RT_STATUS_DEGENERATE = 4,
  RT_STATUS_ZERO_ERROR = 5,
  /**
   * Sensor count not a power of two, or wrong height parity.
   */
  RT_STATUS_SENSOR_COUNT = 6,
  RT_STATUS_OVERFLOW = 7,
  /**
   * Enumeration exceeded its profile cap or height limit.
   */
  RT_STATUS_INFEASIBLE = 8,
  RT_STATUS_PARAMETER = 9,
  RT_STATUS_INDEX_OUT_OF_BOUNDS = 10,
  RT_STATUS_PANIC = 11,
} RtStatus;

/**
 * Opaque profile distribution handle.
 */
typedef struct RtProfileDistribution RtProfileDistribution;

/**
 * Opaque trajectory handle.
 */
typedef struct RtTrajectory RtTrajectory;

typedef struct RtTriplet {
  double alpha;
  double beta;
  double q;
} RtTriplet;

typedef struct RtTrajectoryRecord {
  uint32_t level;
  struct RtTriplet state;
  double total_l;
  /**
   * Meaningless at level 0, see `has_rule`.
   */
  enum RtRule rule_used;
  bool has_rule;
  enum RtRegion region;
} RtTrajectoryRecord;

typedef struct RtProfile {
  double alpha;
  double beta;
  double weight;
} RtProfile;

typedef struct RtMessageStatistics {
  double p_no_data;
  /**
   * NaN when the root never has data.
   */
  double alpha;
  double beta;
} RtMessageStatistics;

typedef struct RtSimulationReport {
  uint64_t trials_per_hypothesis;
  uint64_t seed;
  double alpha_hat;
  double beta_hat;
  double alpha_stderr;
  double beta_stderr;
  uint64_t no_data_h0;
  uint64_t no_data_h1;
} RtSimulationReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *rt_last_error_message(void);

enum RtRule rt_select_rule(double alpha, double beta);

/**
 * # Safety
 * `state` and `out` must be valid pointers.
 */
enum RtStatus rt_fuse_step(const struct RtTriplet *state, struct RtTriplet *out);

/**
 * # Safety
 * `state` and `out` must be valid pointers.
 */
enum RtStatus rt_classify(const struct RtTriplet *state, enum RtRegion *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum RtStatus rt_b1_boundary_beta(double alpha, double q, double *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum RtStatus rt_ru_boundary_beta(double alpha, double q, double *out);

/**
 * # Safety
 * `state` and `out` must be valid pointers.
 */
enum RtStatus rt_two_step_ratio(const struct RtTriplet *state, double *out);

/**
 * Bounds on `log2(1/P_N)`, choosing the even- or odd-height form from `n`.
 *
 * # Safety
 * `lower` and `upper` must be valid pointers.
 */
enum RtStatus rt_error_bounds(double l0, uint64_t n, double *lower, double *upper);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum RtStatus rt_min_sensors_for_error(double l0, double epsilon, uint64_t *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum RtStatus rt_root_failure_prob(double q0, uint64_t n, double *out);

/**
 * Builds a trajectory of `levels + 1` records.
 *
 * # Safety
 * `initial` and `out` must be valid pointers. On success `*out` owns a handle
 * to be released with [`rt_trajectory_free`].
 */
enum RtStatus rt_trajectory_new(const struct RtTriplet *initial,
                                uint32_t levels,
                                struct RtTrajectory **out);

/**
 * # Safety
 * `handle` must be null or a live handle from [`rt_trajectory_new`].
 */
size_t rt_trajectory_len(const struct RtTrajectory *handle);

/**
 * # Safety
 * `handle` must be a live handle and `out` a valid pointer.
 */
enum RtStatus rt_trajectory_get(const struct RtTrajectory *handle,
                                size_t index,
                                struct RtTrajectoryRecord *out);

/**
 * # Safety
 * `handle` must be null or a live handle; it is invalid afterwards.
 */
void rt_trajectory_free(struct RtTrajectory *handle);

/**
 * Writes up to `capacity` level rules into `rules` and the full count into `len`.
 *
 * # Safety
 * `initial` and `len` must be valid pointers; `rules` must hold `capacity`
 * entries (it may be null when `capacity` is 0).
 */
enum RtStatus rt_level_rules(const struct RtTriplet *initial,
                             uint32_t height,
                             enum RtRule *rules,
                             size_t capacity,
                             size_t *len);

/**
 * Exact root profile distribution. `cap` of 0 selects the default cap.
 *
 * # Safety
 * `initial` and `out` must be valid pointers. On success `*out` owns a handle
 * to be released with [`rt_profiles_free`].
 */
enum RtStatus rt_exact_root_statistics(const struct RtTriplet *initial,
                                       uint32_t height,
                                       size_t cap,
                                       struct RtProfileDistribution **out);

/**
 * # Safety
 * `handle` must be null or a live handle.
 */
size_t rt_profiles_len(const struct RtProfileDistribution *handle);

/**
 * # Safety
 * `handle` must be null or a live handle.
 */
double rt_profiles_no_data(const struct RtProfileDistribution *handle);

/**
 * # Safety
 * `handle` must be a live handle and `out` a valid pointer.
 */
enum RtStatus rt_profiles_get(const struct RtProfileDistribution *handle,
                              size_t index,
                              struct RtProfile *out);

/**
 * Mean error pair given the root has data; NaN when it never does.
 *
 * # Safety
 * `handle` must be a live handle; `alpha` and `beta` valid pointers.
 */
enum RtStatus rt_profiles_conditional_mean(const struct RtProfileDistribution *handle,
                                           double *alpha,
                                           double *beta);

/**
 * # Safety
 * `handle` must be null or a live handle; it is invalid afterwards.
 */
void rt_profiles_free(struct RtProfileDistribution *handle);

/**
 * # Safety
 * `initial` and `out` must be valid pointers.
 */
enum RtStatus rt_exact_message_statistics(const struct RtTriplet *initial,
                                          uint32_t height,
                                          struct RtMessageStatistics *out);

/**
 * # Safety
 * `initial` and `out` must be valid pointers.
 */
enum RtStatus rt_simulate(const struct RtTriplet *initial,
                          uint32_t height,
                          uint64_t trials,
                          uint64_t seed,
                          struct RtSimulationReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELAY_TREE_H */
