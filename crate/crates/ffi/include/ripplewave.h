#ifndef RIPPLEWAVE_H
#define RIPPLEWAVE_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Per-cell field of a simulation state.
 */
typedef enum RwField {
  RW_FIELD_U = 0,
  RW_FIELD_V = 1,
  RW_FIELD_U1 = 2,
  RW_FIELD_V1 = 3,
} RwField;

/**
 * Result of every fallible call.
 */
typedef enum RwStatus {
  RW_STATUS_OK = 0,
  RW_STATUS_NULL_POINTER = 1,
  RW_STATUS_INVALID_PARAMETER = 2,
  RW_STATUS_NUMERIC_FAILURE = 3,
  RW_STATUS_NO_RESULT = 4,
  RW_STATUS_INVALID_UTF8 = 5,
  RW_STATUS_PANIC = 6,
} RwStatus;

/**
 * Family of densities held by a simulation.
 */
typedef enum RwSystem {
  RW_SYSTEM_FULL = 0,
  RW_SYSTEM_MEMORY_FREE = 1,
} RwSystem;

/**
 * Opaque model handle.
 */
typedef struct RwModel RwModel;

/**
 * Opaque simulation handle.
 */
typedef struct RwSimulation RwSimulation;

/**
 * Hopf thresholds of the space-independent system.
 */
typedef struct RwHopfThresholds {
  double gamma_star;
  double gamma_hat;
  double gamma_star2;
  /**
   * Whether the model satisfies the conditions under which the thresholds hold.
   */
  bool applicable;
} RwHopfThresholds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *rw_last_error(void);

/**
 * Library version as a static string.
 */
const char *rw_version(void);

/**
 * Parses a model from JSON (`{"lambda": {...}, "gamma": {...}}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RwStatus rw_model_from_json(const char *json, struct RwModel **out);

/**
 * # Safety
 * `model` must come from [`rw_model_from_json`] and not be used afterwards.
 */
void rw_model_free(struct RwModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum RwStatus rw_hopf_thresholds(const struct RwModel *model, struct RwHopfThresholds *out);

/**
 * Creates a simulation on `n_cells` cells from an initial condition string
 * (`sine:A[:N]`, `cosine:A[:N]`, `noise:A[:SEED]`, `csv:PATH`). A `dt` of
 * zero or less selects `0.99·dx`. The model is copied.
 *
 * # Safety
 * `model` must be a live handle, `init` a NUL-terminated string and `out`
 * a valid pointer.
 */
enum RwStatus rw_simulation_new(const struct RwModel *model,
                                size_t n_cells,
                                enum RwSystem system,
                                const char *init,
                                double dt,
                                struct RwSimulation **out);

/**
 * # Safety
 * `sim` must come from [`rw_simulation_new`] and not be used afterwards.
 */
void rw_simulation_free(struct RwSimulation *sim);

/**
 * Advances by `steps` time steps.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum RwStatus rw_simulation_step(struct RwSimulation *sim, size_t steps);

/**
 * Advances until the step count for time `t` is reached.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum RwStatus rw_simulation_advance_to(struct RwSimulation *sim, double t);

/**
 * Current time, NaN for a null handle.
 *
 * # Safety
 * `sim` must be a live handle or null.
 */
double rw_simulation_time(const struct RwSimulation *sim);

/**
 * Number of cells, zero for a null handle.
 *
 * # Safety
 * `sim` must be a live handle or null.
 */
size_t rw_simulation_n_cells(const struct RwSimulation *sim);

/**
 * Total mass `Σ(u + v)·dx`, NaN for a null handle.
 *
 * # Safety
 * `sim` must be a live handle or null.
 */
double rw_simulation_mass(const struct RwSimulation *sim);

/**
 * Copies one field into `buf`, which must hold `len ≥ n_cells` values.
 *
 * # Safety
 * `sim` must be a live handle and `buf` valid for `len` writes.
 */
enum RwStatus rw_simulation_get_field(const struct RwSimulation *sim,
                                      enum RwField field,
                                      double *buf,
                                      size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIPPLEWAVE_H */
