#ifndef BKHM_H
#define BKHM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum BkhmStatus {
  BKHM_STATUS_OK = 0,
  BKHM_STATUS_NULL_POINTER = 1,
  BKHM_STATUS_INVALID_ARGUMENT = 2,
  BKHM_STATUS_GRID_MISMATCH = 3,
  /**
   * CFL violation, non-finite state or no stationarity.
   */
  BKHM_STATUS_NUMERICAL = 4,
  /**
   * Checksum, version, truncation, magic or header errors.
   */
  BKHM_STATUS_SNAPSHOT = 5,
  BKHM_STATUS_IO = 6,
  /**
   * Output buffer shorter than required.
   */
  BKHM_STATUS_BUFFER_TOO_SMALL = 7,
  BKHM_STATUS_PANIC = 8,
} BkhmStatus;

typedef struct BkhmForcing BkhmForcing;

typedef struct BkhmGrid BkhmGrid;

/**
 * Collected snapshots for the statistics.
 */
typedef struct BkhmSampleSet BkhmSampleSet;

typedef struct BkhmSimulation BkhmSimulation;

/**
 * Physical parameters.
 */
typedef struct BkhmPhysics {
  double nu;
  double alpha;
  double beta;
  double f0;
} BkhmPhysics;

/**
 * Squared L2 norms of the current state.
 */
typedef struct BkhmNorms {
  double energy;
  double enstrophy;
  double palinstrophy;
} BkhmNorms;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; valid until the next
 * failing call. Never null.
 */
const char *bkhm_last_error(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *bkhm_version(void);

/**
 * Channel of length `length` in x1 and walls at `a < b`, with `n1` (even)
 * by `n2` interior nodes.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum BkhmStatus bkhm_grid_new(double length,
                              double a,
                              double b,
                              size_t n1,
                              size_t n2,
                              struct BkhmGrid **out);

/**
 * # Safety
 * `grid` must come from [`bkhm_grid_new`] and not be used afterwards.
 */
void bkhm_grid_free(struct BkhmGrid *grid);

/**
 * Number of nodes `n1 * n2`, 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t bkhm_grid_len(const struct BkhmGrid *grid);

/**
 * Forcing on the modes with `kappa_lo <= kappa <= kappa_hi`, normalized to
 * the total injection rate `eps_total`.
 *
 * # Safety
 * `grid` must be a live handle and `out` valid for a pointer write.
 */
enum BkhmStatus bkhm_forcing_new(const struct BkhmGrid *grid,
                                 double kappa_lo,
                                 double kappa_hi,
                                 double eps_total,
                                 struct BkhmForcing **out);

/**
 * # Safety
 * `forcing` must come from [`bkhm_forcing_new`] and not be used afterwards.
 */
void bkhm_forcing_free(struct BkhmForcing *forcing);

/**
 * Energy and enstrophy injection rates per unit area.
 *
 * # Safety
 * `forcing` must be a live handle; the outputs may be null.
 */
enum BkhmStatus bkhm_forcing_rates(const struct BkhmForcing *forcing,
                                   double *eps_area,
                                   double *eta_area);

/**
 * A simulation at rest at t = 0.
 *
 * # Safety
 * `grid`, `forcing` and `physics` must be valid; `out` valid for a pointer write.
 */
enum BkhmStatus bkhm_simulation_new(const struct BkhmGrid *grid,
                                    const struct BkhmForcing *forcing,
                                    const struct BkhmPhysics *physics,
                                    double dt,
                                    uint64_t seed,
                                    struct BkhmSimulation **out);

/**
 * # Safety
 * `sim` must come from [`bkhm_simulation_new`] and not be used afterwards.
 */
void bkhm_simulation_free(struct BkhmSimulation *sim);

/**
 * Advances `n_steps` steps. On a numerical failure the state is left at
 * the last good step.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum BkhmStatus bkhm_simulation_step(struct BkhmSimulation *sim, uint64_t n_steps);

/**
 * Current time and step index; either output may be null.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum BkhmStatus bkhm_simulation_time(const struct BkhmSimulation *sim,
                                     double *t,
                                     uint64_t *step_index);

/**
 * # Safety
 * `sim` must be a live handle and `out` valid for a write.
 */
enum BkhmStatus bkhm_simulation_norms(const struct BkhmSimulation *sim, struct BkhmNorms *out);

/**
 * Copies the physical vorticity, `values[(j-1) n1 + (i-1)]` at node
 * `(i, j)`, into `values`. Needs `len >= n1 n2`.
 *
 * # Safety
 * `sim` must be a live handle and `values` valid for `len` writes.
 */
enum BkhmStatus bkhm_simulation_vorticity(const struct BkhmSimulation *sim,
                                          double *values,
                                          size_t len);

/**
 * Writes the current state as a snapshot file.
 *
 * # Safety
 * `sim` must be a live handle and `path` a NUL-terminated string.
 */
enum BkhmStatus bkhm_simulation_write_snapshot(const struct BkhmSimulation *sim, const char *path);

/**
 * An empty sample set on `grid`.
 *
 * # Safety
 * `grid` must be a live handle and `out` valid for a pointer write.
 */
enum BkhmStatus bkhm_samples_new(const struct BkhmGrid *grid, struct BkhmSampleSet **out);

/**
 * # Safety
 * `set` must come from [`bkhm_samples_new`] and not be used afterwards.
 */
void bkhm_samples_free(struct BkhmSampleSet *set);

/**
 * Number of samples, 0 for a null handle.
 *
 * # Safety
 * `set` must be null or a live handle.
 */
size_t bkhm_samples_len(const struct BkhmSampleSet *set);

/**
 * Appends a copy of the simulation's current state.
 *
 * # Safety
 * Both handles must be live.
 */
enum BkhmStatus bkhm_samples_push_state(struct BkhmSampleSet *set,
                                        const struct BkhmSimulation *sim);

/**
 * Appends the state stored in a snapshot file.
 *
 * # Safety
 * `set` must be a live handle and `path` a NUL-terminated string.
 */
enum BkhmStatus bkhm_samples_push_file(struct BkhmSampleSet *set, const char *path);

/**
 * Evaluates the statistic named `kind` (`gamma_bar`, `D_bar`, ...) at the
 * `n_lengths` separations, averaged over `n_dirs` directions and over the
 * samples. `values` receives `n_lengths` numbers; `at_zero` may be null.
 * `forcing` may be null except for `a_bar` and `fraka_bar`. `interior`
 * nonzero restricts structure functions to rows away from the walls.
 *
 * # Safety
 * Handles must be live or null as described; `kind` NUL-terminated;
 * `lengths` and `values` valid for `n_lengths` elements.
 */
enum BkhmStatus bkhm_samples_statistic(const struct BkhmSampleSet *set,
                                       const struct BkhmForcing *forcing,
                                       const struct BkhmPhysics *physics,
                                       const char *kind,
                                       const double *lengths,
                                       size_t n_lengths,
                                       size_t n_dirs,
                                       int32_t interior,
                                       double *values,
                                       double *at_zero);

/**
 * Runs the brute-force cross-check of the fast statistics on `n_instances`
 * random instances of `grid`. `worst` receives the largest relative
 * discrepancy; returns `BKHM_NUMERICAL` if any check fails.
 *
 * # Safety
 * `grid` must be a live handle; `worst` may be null.
 */
enum BkhmStatus bkhm_oracle_check(const struct BkhmGrid *grid,
                                  size_t n_instances,
                                  uint64_t seed,
                                  double *worst);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BKHM_H */
