#ifndef DDRUC_H
#define DDRUC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DdrucModel {
  DDRUC_MODEL_DDRUC = 0,
  DDRUC_MODEL_BRUC = 1,
  DDRUC_MODEL_BSUC = 2,
} DdrucModel;

typedef enum DdrucOracle {
  DDRUC_ORACLE_INSPECTION = 0,
  DDRUC_ORACLE_MILP = 1,
} DdrucOracle;

/**
 * Result of every fallible call.
 */
typedef enum DdrucStatus {
  DDRUC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DDRUC_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string was not UTF-8, a date did not parse or an option is out of range.
   */
  DDRUC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * An input file or string is malformed or describes an invalid system.
   */
  DDRUC_STATUS_PARSE = 3,
  DDRUC_STATUS_IO = 4,
  /**
   * The history lacks a day that the requested window needs.
   */
  DDRUC_STATUS_MISSING_HISTORY = 5,
  /**
   * No first-stage schedule satisfies the constraints.
   */
  DDRUC_STATUS_INFEASIBLE = 6,
  /**
   * The optimization engine failed or an oracle audit did not pass.
   */
  DDRUC_STATUS_SOLVER_FAILURE = 7,
  /**
   * CCGA stopped before the imbalance fell within tolerance.
   */
  DDRUC_STATUS_ITERATION_LIMIT = 8,
  /**
   * A unit or hour index is out of range.
   */
  DDRUC_STATUS_OUT_OF_RANGE = 9,
  /**
   * A Rust panic was caught at the boundary.
   */
  DDRUC_STATUS_PANIC = 10,
} DdrucStatus;

/**
 * Schedule quantity read by [`ddruc_schedule_value`].
 */
typedef enum DdrucField {
  /**
   * 1 when committed, 0 otherwise.
   */
  DDRUC_FIELD_ON_OFF = 0,
  DDRUC_FIELD_GENERATION = 1,
  DDRUC_FIELD_RESERVE_UP = 2,
  DDRUC_FIELD_RESERVE_DOWN = 3,
} DdrucField;

/**
 * Daily renewable history.
 */
typedef struct DdrucHistory DdrucHistory;

/**
 * A day's schedule and how it was obtained.
 */
typedef struct DdrucSchedule DdrucSchedule;

/**
 * A parsed system with its network matrices.
 */
typedef struct DdrucSystem DdrucSystem;

/**
 * Options for [`ddruc_solve_day`]. Start from [`ddruc_default_options`].
 */
typedef struct DdrucOptions {
  enum DdrucModel model;
  /**
   * Ignored for BRUC, which always uses the MILP oracle.
   */
  enum DdrucOracle oracle;
  /**
   * DDUS window length in days.
   */
  uint32_t k;
  double gamma;
  /**
   * Temporal budget; 0 means the horizon.
   */
  uint32_t lambda;
  uint32_t box_window_days;
  /**
   * Imbalance tolerance as a fraction of total demand.
   */
  double epsilon_fraction;
  double relative_gap;
  double time_limit_s;
  uint32_t bsuc_scenarios;
  double bsuc_imbalance_cost;
  uint32_t bsuc_fit_window_days;
  uint64_t seed;
} DdrucOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *ddruc_last_error(void);

/**
 * Library version as a static string.
 */
const char *ddruc_version(void);

struct DdrucOptions ddruc_default_options(void);

/**
 * Read a TOML instance file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DdrucStatus ddruc_system_from_file(const char *path, struct DdrucSystem **out);

/**
 * Parse a TOML instance from memory.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DdrucStatus ddruc_system_from_toml(const char *text, struct DdrucSystem **out);

/**
 * # Safety
 * `system` must be null or come from this library and not be used afterwards.
 */
void ddruc_system_free(struct DdrucSystem *system);

/**
 * Hours in the scheduling horizon, 0 for a null pointer.
 *
 * # Safety
 * Pointers must be null or valid for their types.
 */
size_t ddruc_system_horizon(const struct DdrucSystem *system);

/**
 * Thermal units in the system, 0 for a null pointer.
 *
 * # Safety
 * Pointers must be null or valid for their types.
 */
size_t ddruc_system_thermal_count(const struct DdrucSystem *system);

/**
 * Renewable units in the system, 0 for a null pointer.
 *
 * # Safety
 * Pointers must be null or valid for their types.
 */
size_t ddruc_system_renewable_count(const struct DdrucSystem *system);

/**
 * Read a history CSV. `horizon` of 0 accepts any consistent day length.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DdrucStatus ddruc_history_from_file(const char *path,
                                         size_t horizon,
                                         struct DdrucHistory **out);

/**
 * # Safety
 * `history` must be null or come from this library and not be used afterwards.
 */
void ddruc_history_free(struct DdrucHistory *history);

/**
 * Schedule `date` (`YYYY-MM-DD`) from the history before it. `options` may
 * be null for the defaults.
 *
 * # Safety
 * Pointers must come from this library or be valid for their types.
 */
enum DdrucStatus ddruc_solve_day(const struct DdrucSystem *system,
                                 const struct DdrucHistory *history,
                                 const char *date,
                                 const struct DdrucOptions *options,
                                 struct DdrucSchedule **out);

/**
 * # Safety
 * `schedule` must be null or come from this library and not be used afterwards.
 */
void ddruc_schedule_free(struct DdrucSchedule *schedule);

/**
 * Total first-stage cost in $.
 *
 * # Safety
 * Pointers must be null or valid for their types.
 */
enum DdrucStatus ddruc_schedule_total_cost(const struct DdrucSchedule *schedule, double *out);

/**
 * CCGA iterations (1 for BSUC), 0 for a null pointer.
 *
 * # Safety
 * Pointers must be null or valid for their types.
 */
size_t ddruc_schedule_iterations(const struct DdrucSchedule *schedule);

/**
 * One entry of the schedule, with `unit` and `hour` counted from 0.
 *
 * # Safety
 * Pointers must be null or valid for their types.
 */
enum DdrucStatus ddruc_schedule_value(const struct DdrucSchedule *schedule,
                                      enum DdrucField field,
                                      size_t unit,
                                      size_t hour,
                                      double *out);

/**
 * The schedule as JSON. Release the string with [`ddruc_string_free`].
 *
 * # Safety
 * Pointers must be null or valid for their types.
 */
enum DdrucStatus ddruc_schedule_to_json(const struct DdrucSchedule *schedule, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void ddruc_string_free(char *s);

/**
 * Minimum shedding plus spillage (MWh) of `schedule` against a realized
 * renewable profile, given row-major as `[unit][hour]` with `len` entries.
 *
 * # Safety
 * `values` must point to `len` readable doubles.
 */
enum DdrucStatus ddruc_imbalance(const struct DdrucSystem *system,
                                 const struct DdrucSchedule *schedule,
                                 const double *values,
                                 size_t len,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DDRUC_H */
