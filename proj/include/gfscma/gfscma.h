/* C interface to the grant-free SCMA activity-detection library.
 *
 * All functions returning int use the gfs_status codes below; on any failure
 * a thread-local message is available via gfs_last_error(). Handles are
 * opaque and must be released with their matching _free function. */
#ifndef GFSCMA_H
#define GFSCMA_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gfs_status {
  GFS_OK = 0,
  GFS_ERR_INVALID_ARGUMENT = 1,
  GFS_ERR_IO = 2,
  GFS_ERR_PARSE = 3,
  GFS_ERR_RUNTIME = 4
} gfs_status;

/* Thread-local message for the most recent failure; empty string if none. */
const char* gfs_last_error(void);

/* ---- Fine-grained handles ------------------------------------------- */

typedef struct gfs_preamble_set gfs_preamble_set;
typedef struct gfs_codebook_set gfs_codebook_set;
typedef struct gfs_ctu_map gfs_ctu_map;
typedef struct gfs_model gfs_model;

/* Unit-energy Zadoff-Chu preambles: all cyclic shifts of each root. */
int gfs_preamble_set_build(uint32_t n_zc, const uint32_t* roots,
                           size_t n_roots, uint32_t shifts_per_root,
                           gfs_preamble_set** out);
void gfs_preamble_set_free(gfs_preamble_set* set);
size_t gfs_preamble_set_size(const gfs_preamble_set* set);
/* |<p_a, p_b>| */
int gfs_preamble_cross_correlation(const gfs_preamble_set* set, size_t a,
                                   size_t b, double* out);

int gfs_codebook_set_load(const char* path, gfs_codebook_set** out);
void gfs_codebook_set_free(gfs_codebook_set* cbs);
int gfs_codebook_set_dims(const gfs_codebook_set* cbs, uint32_t* J,
                          uint32_t* K, uint32_t* N, uint32_t* M);
/* Average codeword power of codebook j. */
int gfs_codebook_power(const gfs_codebook_set* cbs, uint32_t j, double* out);

/* assoc: "random" (seeded) or "rs" (root-separated; needs one root per
 * codebook). J is the codebook count (round-robin CTU-to-codebook rule). */
int gfs_ctu_map_build(const gfs_preamble_set* set, uint32_t J,
                      const char* assoc, uint64_t seed, gfs_ctu_map** out);
int gfs_ctu_map_save(const gfs_ctu_map* map, const gfs_preamble_set* set,
                     const char* path);
int gfs_ctu_map_load(const char* path, gfs_ctu_map** out);
void gfs_ctu_map_free(gfs_ctu_map* map);
uint32_t gfs_ctu_map_size(const gfs_ctu_map* map);
/* Max/mean |corr| over same-codebook preamble pairs. */
int gfs_ctu_same_cb_correlation(const gfs_ctu_map* map,
                                const gfs_preamble_set* set, double* max_out,
                                double* mean_out);

int gfs_model_load(const char* checkpoint_path, gfs_model** out);
void gfs_model_free(gfs_model* model);
/* Trainable parameter counts of the extraction and detection networks. */
int gfs_model_param_counts(const gfs_model* model, size_t* uaen_out,
                           size_t* audn_out);
/* Copies the stage tag ("init", "pretrained", "joint", "trained"). */
int gfs_model_stage(const gfs_model* model, char* buf, size_t buf_len);

/* ---- Run-level commands ---------------------------------------------- */
/* Options are JSON object strings; missing keys take documented defaults.
 * Every run writes its artifacts plus a reproducibility manifest. */

/* {"n_zc":7,"roots":[1,...,6],"shifts":7,"assoc":"rs","seed":1,"out":"..."} */
int gfs_run_ctu_build(const char* options_json);

/* {"model":"proposed","stage":"all","preset":"desk","config":"",
 *  "cb_file":"...","ctu_file":"...","n_zc":7,"seed":1,"out":"dir", ...} */
int gfs_run_train(const char* options_json);

/* {"axis":"snr","points":"4:20:4","fixed_n_active":6,"frames":10000,
 *  "models":["a.ckpt"],"cb_file":"...","ctu_file":"...","n_zc":7,
 *  "seed":1,"out":"sweep.csv"} */
int gfs_run_sweep(const char* options_json);

int gfs_run_plot(const char* csv_in, const char* svg_out);

/* suite: "zc" | "grad" | "sim" | "all"; report_path may be NULL.
 * failures_out receives the failed-check count (may be NULL). */
int gfs_run_verify(const char* suite, const char* report_path,
                   int* failures_out);

/* Re-executes a recorded manifest; fails unless all outputs are reproduced
 * bit-identically. */
int gfs_rerun(const char* manifest_path);

#ifdef __cplusplus
}
#endif

#endif /* GFSCMA_H */
