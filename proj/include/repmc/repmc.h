/* C interface to the repmc sampler library.
 *
 * All functions return a repmc_status; on failure repmc_last_error() holds a
 * thread-local description of what went wrong. Strings returned through
 * output parameters are heap-allocated and must be released with
 * repmc_string_free().
 */
#ifndef REPMC_H
#define REPMC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum repmc_status {
  REPMC_OK = 0,
  REPMC_ERR_INVALID_ARGUMENT = 1,
  REPMC_ERR_CONFIG = 2,
  REPMC_ERR_DIVERGED = 3,
  REPMC_ERR_IO = 4,
  REPMC_ERR_INTERNAL = 5
} repmc_status;

const char* repmc_version(void);

/* Thread-local message for the most recent failure; empty string if none. */
const char* repmc_last_error(void);

void repmc_string_free(char* s);

/* ---- probability metrics on raw point buffers (row-major points) ---- */

/* Squared MMD with an RBF kernel; sigma <= 0 selects the median heuristic. */
repmc_status repmc_mmd_squared(const double* a, size_t a_count,
                               const double* b, size_t b_count, size_t dim,
                               double sigma, double* out);

/* Exact squared 2-Wasserstein distance between equal-size uniform empirical
 * measures (linear assignment on squared Euclidean costs). */
repmc_status repmc_wasserstein2_squared(const double* a, size_t a_count,
                                        const double* b, size_t b_count,
                                        size_t dim, double* out);

/* ---- config-driven experiments ---- */

typedef struct repmc_experiment repmc_experiment;

/* Parses and validates a JSON config document. */
repmc_status repmc_experiment_create(const char* config_json,
                                     repmc_experiment** out);
void repmc_experiment_free(repmc_experiment* handle);

repmc_status repmc_experiment_set_outdir(repmc_experiment* handle,
                                         const char* dir);
repmc_status repmc_experiment_set_seeds(repmc_experiment* handle,
                                        const uint64_t* seeds, size_t count);
repmc_status repmc_experiment_set_jobs(repmc_experiment* handle, int jobs);

/* Default-filled form of the parsed config as a JSON string. */
repmc_status repmc_experiment_effective_config(repmc_experiment* handle,
                                               char** json_out);

/* Runs one of: toy2d, ablate, diversity, ensemble-eval. Writes artifacts
 * under the output directory and hands back the experiment report JSON. */
repmc_status repmc_experiment_run(repmc_experiment* handle, const char* command,
                                  char** report_json_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* REPMC_H */
