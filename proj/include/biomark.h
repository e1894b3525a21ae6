/* C API for the biomarker discovery pipeline.
 *
 * Every entry point returns a bm_status; on anything but BM_OK the message
 * from bm_last_error() describes what went wrong (thread-local storage).
 * Status values 2/3/4 match the CLI exit codes.
 */
#ifndef BIOMARK_H
#define BIOMARK_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bm_status {
    BM_OK = 0,
    BM_ERR = 1,        /* unexpected internal failure */
    BM_ERR_CONFIG = 2, /* invalid configuration or arguments */
    BM_ERR_DATA = 3,   /* malformed or inconsistent input data */
    BM_ERR_NUMERIC = 4 /* numerical divergence */
} bm_status;

const char* bm_version(void);

/* Message for the most recent failure on this thread; never NULL. */
const char* bm_last_error(void);

/* Opaque handle holding a completed pipeline run. */
typedef struct bm_result bm_result;

/* Generate a synthetic cohort into out_dir (per-modality CSVs, labels,
 * ground-truth masks, and the generating interaction graph).
 * config_json may be NULL or "" for defaults; has_seed != 0 overrides the
 * config seed with the given one. */
bm_status bm_simulate(const char* config_json, int has_seed, uint64_t seed,
                      const char* out_dir);

/* Full pipeline run. out_dir may be NULL to skip writing artifacts
 * (qvalues.csv, map.dot, map.json, report.csv, edges.tsv). When out_result
 * is non-NULL it receives a handle the caller must free with
 * bm_result_free. */
bm_status bm_run(const char* config_json, int has_seed, uint64_t seed, const char* out_dir,
                 bm_result** out_result);

/* Run the benchmark grid described by config_json and write the aggregate
 * CSV to out_csv_path. */
bm_status bm_benchmark(const char* config_json, const char* out_csv_path);

/* Convert a map JSON artifact to "dot" or "json" at out_path. */
bm_status bm_map_convert(const char* map_json_path, const char* out_path,
                         const char* format);

/* Accessors for a completed run. Index order matches the ranked q-value
 * table. bm_result_metric names: "auc", "f1", "feature_precision"
 * (BM_ERR_DATA when absent), "selected", "pi0". */
size_t bm_result_feature_count(const bm_result* result);
const char* bm_result_feature_id(const bm_result* result, size_t index);
bm_status bm_result_feature_stats(const bm_result* result, size_t index, double* p_out,
                                  double* q_out);
bm_status bm_result_metric(const bm_result* result, const char* name, double* out);
void bm_result_free(bm_result* result);

/* Standalone numeric helpers operating on caller arrays. */

/* Storey q-values for m p-values; pi0_out may be NULL. */
bm_status bm_storey_qvalues(const double* p, size_t m, double lambda, double* q_out,
                            double* pi0_out);

/* Rank-based AUC of scores against 0/1 labels. */
bm_status bm_auc(const double* scores, const int* labels, size_t n, double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BIOMARK_H */
