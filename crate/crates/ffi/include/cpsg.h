/* C interface for the cpsg disaster-response game engine. */

#ifndef CPSG_H
#define CPSG_H

/* Generated by cbindgen from the cpsg-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a C API call.
typedef enum CpsgStatus {
  // The call succeeded.
  CPSG_STATUS_OK = 0,
  // A required pointer argument was null.
  CPSG_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  CPSG_STATUS_INVALID_UTF8 = 2,
  // Reading or writing a file failed.
  CPSG_STATUS_IO = 3,
  // The input was rejected (bad JSON, out-of-range value, bad name).
  CPSG_STATUS_INVALID_INPUT = 4,
  // An internal invariant failed.
  CPSG_STATUS_RUNTIME = 5,
} CpsgStatus;

// A validated model parameter set.
typedef struct CpsgParams CpsgParams;

// One finished trajectory: states, applied controls, running costs, and
// (for training runs) the learned actor weights.
typedef struct CpsgRun CpsgRun;

// A validated scenario: horizon, exogenous drivers, initial state, and
// optionally an observed trajectory.
typedef struct CpsgScenario CpsgScenario;

// Learner hyperparameters; get defaults from [`cpsg_hyper_default`].
typedef struct CpsgHyper {
  // Critic learning rate.
  double alpha_c;
  // Actor learning rate (must stay below `alpha_c` unless both are 0).
  double alpha_a;
  // Exploration horizon in time units.
  double t_ex;
  // Exploration amplitude bound.
  double n_bar;
} CpsgHyper;

// Scalar facts about a scenario, filled by [`cpsg_scenario_info`].
typedef struct CpsgScenarioInfo {
  // Integration step.
  double dt;
  // Number of integration steps; trajectories carry `horizon + 1` states.
  uint64_t horizon;
  // Piecewise-stationary signal window, in steps.
  uint64_t window_len;
  // Seed bundled with the scenario file.
  uint64_t seed;
  // True when the scenario carries an observed trajectory.
  bool has_observed;
} CpsgScenarioInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the most recent error message into `buf` as a NUL-terminated
// string, truncating if `cap` is too small. Returns the full message
// length in bytes (excluding the terminator), so callers can re-query
// with a larger buffer; a zero return means "no error recorded".
// Passing a null `buf` or zero `cap` just reports the required length.
size_t cpsg_last_error_message(char *buf, size_t cap);

// Crate version as a static NUL-terminated string; never null.
const char *cpsg_version(void);

// The published training setup: critic rate 0.5, actor rate 0.1,
// exploration horizon 12 with amplitude bound 0.3.
struct CpsgHyper cpsg_hyper_default(void);

// Load a bundled scenario by name (`harvey_synth` or `irma_synth`).
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be a valid pointer.
enum CpsgStatus cpsg_scenario_builtin(const char *name, struct CpsgScenario **out);

// Load and validate a scenario from a JSON file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be a valid pointer.
enum CpsgStatus cpsg_scenario_load(const char *path, struct CpsgScenario **out);

// Release a scenario handle. Null is accepted.
//
// # Safety
// `ptr` must be null or a handle produced by this library, not yet freed.
void cpsg_scenario_free(struct CpsgScenario *ptr);

// Fill `info` with the scenario's scalar facts.
//
// # Safety
// Both pointers must be valid.
enum CpsgStatus cpsg_scenario_info(const struct CpsgScenario *scenario,
                                   struct CpsgScenarioInfo *info);

// The reference parameter set used by the bundled scenarios.
//
// # Safety
// `out` must be a valid pointer.
enum CpsgStatus cpsg_params_reference(struct CpsgParams **out);

// Load and validate model parameters from a JSON file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be a valid pointer.
enum CpsgStatus cpsg_params_load(const char *path, struct CpsgParams **out);

// Write a parameter set to a JSON file.
//
// # Safety
// `params` must be a live handle; `path` a NUL-terminated string.
enum CpsgStatus cpsg_params_save(const struct CpsgParams *params, const char *path);

// Release a parameter handle. Null is accepted.
//
// # Safety
// `ptr` must be null or a handle produced by this library, not yet freed.
void cpsg_params_free(struct CpsgParams *ptr);

// Run the online three-player learner over the scenario horizon and
// return the training trajectory (probing included) plus the learned
// actor weights.
//
// # Safety
// `scenario` and `params` must be live handles; `out` a valid pointer.
enum CpsgStatus cpsg_train(const struct CpsgScenario *scenario,
                           const struct CpsgParams *params,
                           struct CpsgHyper hyper,
                           uint64_t seed,
                           struct CpsgRun **out);

// Integrate the model forward with zero control.
//
// # Safety
// `scenario` and `params` must be live handles; `out` a valid pointer.
enum CpsgStatus cpsg_open_loop(const struct CpsgScenario *scenario,
                               const struct CpsgParams *params,
                               struct CpsgRun **out);

// Replay a training run's learned policies from the scenario's initial
// state with probing off: the headline closed-loop trajectory. Fails
// with `CPSG_STATUS_INVALID_INPUT` when `run` carries no weights (open
// loop or replay output).
//
// # Safety
// All handles must be live; `out` a valid pointer.
enum CpsgStatus cpsg_replay(const struct CpsgRun *run,
                            const struct CpsgScenario *scenario,
                            const struct CpsgParams *params,
                            struct CpsgRun **out);

// Release a run handle. Null is accepted.
//
// # Safety
// `ptr` must be null or a handle produced by this library, not yet freed.
void cpsg_run_free(struct CpsgRun *ptr);

// Number of states in the run (`horizon + 1`); zero for a null handle.
//
// # Safety
// `run` must be null or a live handle.
size_t cpsg_run_len(const struct CpsgRun *run);

// Copy state `step` (0-based, `step < cpsg_run_len`) into `out[10]`.
//
// # Safety
// `run` must be a live handle; `out` must point to 10 writable doubles.
enum CpsgStatus cpsg_run_state(const struct CpsgRun *run, size_t step, double *out);

// Copy the applied controls of `step` (0-based, one fewer than states)
// into `out[3]`.
//
// # Safety
// `run` must be a live handle; `out` must point to 3 writable doubles.
enum CpsgStatus cpsg_run_control(const struct CpsgRun *run, size_t step, double *out);

// Copy the per-player accumulated costs into `out[3]`.
//
// # Safety
// `run` must be a live handle; `out` must point to 3 writable doubles.
enum CpsgStatus cpsg_run_costs(const struct CpsgRun *run, double *out);

// Mean fear over the post-initial states; NaN for an empty or null run.
//
// # Safety
// `run` must be null or a live handle.
double cpsg_run_mean_fear(const struct CpsgRun *run);

// Pooled RMSE of the run against the scenario's observed trajectory,
// over the overlapping steps; NaN when the scenario has none.
//
// # Safety
// `run` and `scenario` must be null or live handles.
double cpsg_run_rmse_vs_observed(const struct CpsgRun *run, const struct CpsgScenario *scenario);

// Write the run's states as CSV (`t,x1..x10`) to `path`.
//
// # Safety
// `run` must be a live handle; `path` a NUL-terminated string.
enum CpsgStatus cpsg_run_write_states_csv(const struct CpsgRun *run, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPSG_H */
