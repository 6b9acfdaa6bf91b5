#ifndef NC_TAILS_H
#define NC_TAILS_H

/* Generated by cbindgen from nc-tails-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes for every fallible entry point.
 */
typedef enum NcStatus {
  NC_STATUS_OK = 0,
  NC_STATUS_NULL_POINTER = 1,
  NC_STATUS_INVALID_ARGUMENT = 2,
  NC_STATUS_PARSE_ERROR = 3,
  NC_STATUS_IO_ERROR = 4,
  NC_STATUS_RUNTIME_ERROR = 5,
} NcStatus;

/**
 * Opaque handle: Monte Carlo samples of one series kind.
 */
typedef struct NcSampleSet NcSampleSet;

/**
 * Opaque handle: a parsed and validated scenario configuration.
 */
typedef struct NcScenario NcScenario;

/**
 * Opaque handle: a finite real sequence.
 */
typedef struct NcSequence NcSequence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent error on this thread. Never null; empty
 * before the first error. Invalidated by the next failing call.
 */
const char *nc_last_error_message(void);

/**
 * Create a sequence from `len` doubles. On success writes a handle that
 * must be released with `nc_sequence_free`.
 *
 * # Safety
 * `values` must point to `len` readable doubles and `out` to a writable
 * pointer slot.
 */
enum NcStatus nc_sequence_new(const double *values, size_t len, struct NcSequence **out);

/**
 * # Safety
 * `seq` must be a pointer returned by `nc_sequence_new` (or null).
 */
void nc_sequence_free(struct NcSequence *seq);

/**
 * Exact (ℓ₁, ℓ₂) K-functional at parameter `t ≥ 0`.
 *
 * # Safety
 * `seq` must be a live sequence handle and `out` writable.
 */
enum NcStatus nc_k12_exact(const struct NcSequence *seq, double t, double *out);

/**
 * Head/tail split form of the K-functional.
 *
 * # Safety
 * As `nc_k12_exact`.
 */
enum NcStatus nc_k12_holmstedt(const struct NcSequence *seq, double t, double *out);

/**
 * `ℓ_p` norm; pass `INFINITY` for the max norm.
 *
 * # Safety
 * As `nc_k12_exact`.
 */
enum NcStatus nc_lp_norm(const struct NcSequence *seq, double p, double *out);

/**
 * Lorentz `ℓ_{q,r}` norm; pass `INFINITY` as `r` for the weak norm.
 *
 * # Safety
 * As `nc_k12_exact`.
 */
enum NcStatus nc_lorentz_norm(const struct NcSequence *seq, double q, double r, double *out);

/**
 * Parse and validate a scenario from a JSON string. The scenario must
 * carry its own seed. Release with `nc_scenario_free`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum NcStatus nc_scenario_parse_json(const char *json, struct NcScenario **out);

/**
 * # Safety
 * `scenario` must be a pointer returned by `nc_scenario_parse_json`
 * (or null).
 */
void nc_scenario_free(struct NcScenario *scenario);

/**
 * Configured trial count of a scenario handle (0 for null).
 *
 * # Safety
 * `scenario` must be a live handle or null.
 */
uint64_t nc_scenario_trials(const struct NcScenario *scenario);

/**
 * Draw Monte Carlo samples of the given kind ("epsilon", "gauss",
 * "gauss-trunc", "gauss-split-trunc", "commutative"). `trials = 0` uses
 * the scenario's configured count. Release with `nc_sample_set_free`.
 *
 * # Safety
 * `scenario` must be a live handle, `kind` NUL-terminated, `out` writable.
 */
enum NcStatus nc_monte_carlo(const struct NcScenario *scenario,
                             const char *kind,
                             uint64_t trials,
                             struct NcSampleSet **out);

/**
 * Number of samples held by the handle (0 for null).
 *
 * # Safety
 * `set` must be a live handle or null.
 */
size_t nc_sample_set_len(const struct NcSampleSet *set);

/**
 * Copy samples (trial order) into a caller buffer of capacity `len`.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum NcStatus nc_sample_set_copy(const struct NcSampleSet *set, double *buf, size_t len);

/**
 * Summary statistics of a sample set.
 *
 * # Safety
 * All out pointers must be writable; `set` must be a live handle.
 */
enum NcStatus nc_sample_set_stats(const struct NcSampleSet *set,
                                  double *mean,
                                  double *std_dev,
                                  double *min,
                                  double *max);

/**
 * # Safety
 * `set` must be a pointer returned by `nc_monte_carlo` (or null).
 */
void nc_sample_set_free(struct NcSampleSet *set);

/**
 * Luxemburg gauge of the samples for the Orlicz function exp(t^p) − 1.
 *
 * # Safety
 * `set` must be a live handle and `out` writable.
 */
enum NcStatus nc_orlicz_exp_norm(const struct NcSampleSet *set, double p, double *out);

/**
 * Run every check of a scenario config file and write the report JSON
 * (plus per-check tables next to it). `all_passed` receives the verdict:
 * true iff every non-inconclusive check passed.
 *
 * # Safety
 * Both paths must be NUL-terminated strings; `all_passed` writable.
 */
enum NcStatus nc_run_scenario(const char *config_path, const char *report_path, bool *all_passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NC_TAILS_H */
