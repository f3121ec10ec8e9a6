#ifndef PFDTD_H
#define PFDTD_H

/* Generated by cbindgen from pfdtd-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes mirroring the CLI exit codes, plus argument errors.
 */
typedef enum PfdtdStatus {
  PFDTD_STATUS_OK = 0,
  PFDTD_STATUS_CONFIG_ERROR = 2,
  PFDTD_STATUS_SIMULATION_ERROR = 3,
  PFDTD_STATUS_MISSING_ARTIFACT = 4,
  PFDTD_STATUS_NULL_ARGUMENT = 5,
  PFDTD_STATUS_INVALID_UTF8 = 6,
} PfdtdStatus;

/**
 * Opaque convergence report handle.
 */
typedef struct PfdtdReport PfdtdReport;

/**
 * Opaque scenario handle.
 */
typedef struct PfdtdScenario PfdtdScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last error on this thread; empty string if none. Owned by
 * the library, valid until the next failing call on the same thread.
 */
const char *pfdtd_last_error(void);

/**
 * Library version string (static storage).
 */
const char *pfdtd_version(void);

/**
 * Desk-scale built-in scenario. Never fails.
 */
struct PfdtdScenario *pfdtd_scenario_desk(void);

/**
 * Paper-scale built-in scenario. Never fails.
 */
struct PfdtdScenario *pfdtd_scenario_paper(void);

/**
 * Load a scenario from a TOML file whose keys override the named profile
 * ("desk" or "paper"). On success `*out` owns a new handle.
 *
 * # Safety
 * `profile` and `path` must be valid NUL-terminated strings, `out` a valid
 * pointer to writable storage.
 */
enum PfdtdStatus pfdtd_scenario_from_toml(const char *profile,
                                          const char *path,
                                          struct PfdtdScenario **out);

/**
 * # Safety
 * `scenario` must be a handle from this library, not yet freed, or null.
 */
void pfdtd_scenario_free(struct PfdtdScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle; `dir` a valid NUL-terminated string.
 */
enum PfdtdStatus pfdtd_scenario_set_output_dir(struct PfdtdScenario *scenario, const char *dir);

/**
 * Worker count for sweeps; 0 means available parallelism.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum PfdtdStatus pfdtd_scenario_set_workers(struct PfdtdScenario *scenario, uint32_t workers);

/**
 * Run the full finite-structure simulation, writing artifacts under the
 * scenario's output directory.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum PfdtdStatus pfdtd_run_full(const struct PfdtdScenario *scenario);

/**
 * Run (or resume) the unit-cell sweep.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum PfdtdStatus pfdtd_run_sweep(const struct PfdtdScenario *scenario);

/**
 * Run one TF/SF edge simulation. `high_side` selects the structure edge;
 * `n_edge` < 0 uses the largest scheduled value.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum PfdtdStatus pfdtd_run_edge(const struct PfdtdScenario *scenario,
                                bool high_side,
                                int32_t n_edge);

/**
 * Merge the inner estimate with both edge runs.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum PfdtdStatus pfdtd_run_merge(const struct PfdtdScenario *scenario, int32_t n_edge);

/**
 * Run the convergence search. On success `*out_report` owns a new report
 * handle.
 *
 * # Safety
 * `scenario` must be a live handle; `out_report` valid writable storage.
 */
enum PfdtdStatus pfdtd_run_converge(const struct PfdtdScenario *scenario,
                                    struct PfdtdReport **out_report);

/**
 * # Safety
 * `rep` must be a handle from this library, not yet freed, or null.
 */
void pfdtd_report_free(struct PfdtdReport *rep);

/**
 * Number of evaluated schedule entries (0 for a null handle).
 *
 * # Safety
 * `rep` must be a live handle or null.
 */
size_t pfdtd_report_len(const struct PfdtdReport *rep);

/**
 * Fetch one report entry by index. Out pointers may be null to skip fields.
 *
 * # Safety
 * `rep` must be a live handle; non-null out pointers must be writable.
 */
enum PfdtdStatus pfdtd_report_entry(const struct PfdtdReport *rep,
                                    size_t index,
                                    uint32_t *out_n_edge,
                                    double *out_raw,
                                    double *out_normalized,
                                    bool *out_converged);

/**
 * Threshold the search stopped against (NaN for a null handle).
 *
 * # Safety
 * `rep` must be a live handle or null.
 */
double pfdtd_report_threshold(const struct PfdtdReport *rep);

/**
 * Single-bin DFT of a complex series: out = Σ v[n]·e^{−j2πf·n·dt}·dt.
 *
 * # Safety
 * `re` and `im` must point to `len` readable doubles; `out_re`/`out_im`
 * must be writable.
 */
enum PfdtdStatus pfdtd_dft_at(const double *re,
                              const double *im,
                              size_t len,
                              double dt,
                              double f_hz,
                              double *out_re,
                              double *out_im);

/**
 * Compute a scenario's artifact directory as an owned C string; release
 * with [`pfdtd_string_free`].
 *
 * # Safety
 * `scenario` must be a live handle.
 */
char *pfdtd_scenario_output_dir(const struct PfdtdScenario *scenario);

/**
 * # Safety
 * `s` must be a pointer returned by this library's string-returning
 * functions, not yet freed, or null.
 */
void pfdtd_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PFDTD_H */
