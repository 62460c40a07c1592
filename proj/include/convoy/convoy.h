/* C interface to the convoy simulator. All objects are opaque handles owned by
 * the caller and released with the matching *_free function. Every call that
 * can fail returns a status; the message of the most recent failure on the
 * calling thread is available from convoy_last_error(). */
#ifndef CONVOY_CONVOY_H
#define CONVOY_CONVOY_H

#include <stddef.h>

#if defined(_WIN32)
#define CONVOY_API __declspec(dllexport)
#else
#define CONVOY_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum convoy_status {
  CONVOY_OK = 0,
  CONVOY_E_INVALID_ARGUMENT = 1,
  CONVOY_E_DOMAIN = 2,
  CONVOY_E_CONFIG = 3,
  CONVOY_E_SHAPE = 4,
  CONVOY_E_PROTOCOL = 5,
  CONVOY_E_MEMBERSHIP = 6,
  CONVOY_E_GEOMETRY = 7,
  CONVOY_E_NUMERICAL = 8,
  CONVOY_E_IO = 9,
  CONVOY_E_REFUSED = 10,
  CONVOY_E_INTERNAL = 11
} convoy_status;

typedef struct convoy_config convoy_config;
typedef struct convoy_model convoy_model;
typedef struct convoy_table convoy_table;

CONVOY_API const char* convoy_last_error(void);
CONVOY_API const char* convoy_status_name(convoy_status status);
/* Nonzero for statuses caused by bad input rather than by a failed run. */
CONVOY_API int convoy_status_is_validation(convoy_status status);

/* Configuration */
CONVOY_API convoy_status convoy_config_default(convoy_config** out);
CONVOY_API convoy_status convoy_config_parse(const char* text, convoy_config** out);
CONVOY_API convoy_status convoy_config_load(const char* path, convoy_config** out);
CONVOY_API convoy_status convoy_config_set(convoy_config* cfg, const char* key, const char* value);
/* Copies the value into buf (NUL-terminated, truncated to cap); *len gets the full length. */
CONVOY_API convoy_status convoy_config_get(const convoy_config* cfg, const char* key, char* buf, size_t cap, size_t* len);
CONVOY_API convoy_status convoy_config_validate(const convoy_config* cfg);
CONVOY_API void convoy_config_free(convoy_config* cfg);

/* Models */
CONVOY_API convoy_status convoy_model_load(const char* path, convoy_model** out);
CONVOY_API convoy_status convoy_model_save(const convoy_model* model, const char* path);
CONVOY_API void convoy_model_free(convoy_model* model);

/* Runs. Output tables are new handles. model may be NULL. */
CONVOY_API convoy_status convoy_run_scenario(const convoy_config* cfg, const convoy_model* model,
                                             convoy_table** metrics, convoy_table** links, convoy_table** trace);
/* widths may be NULL to use the configured sweep. */
CONVOY_API convoy_status convoy_sweep_align(const convoy_config* cfg, const double* widths_deg, size_t count,
                                            convoy_table** out);
CONVOY_API convoy_status convoy_train_gnn(const convoy_config* cfg, convoy_model** model, convoy_table** loss);
CONVOY_API convoy_status convoy_eval_beamforming(const convoy_config* cfg, const convoy_model* model,
                                                 convoy_table** out);
CONVOY_API convoy_status convoy_oracle(const convoy_config* cfg, convoy_table** out);
/* *invariants_ok is 1 when every quiescent point passed. */
CONVOY_API convoy_status convoy_fuzz_topology(const convoy_config* cfg, convoy_table** summary, convoy_table** trace,
                                              int* invariants_ok);

/* Tables */
CONVOY_API size_t convoy_table_rows(const convoy_table* t);
CONVOY_API size_t convoy_table_cols(const convoy_table* t);
CONVOY_API const char* convoy_table_header(const convoy_table* t, size_t col);
CONVOY_API const char* convoy_table_cell(const convoy_table* t, size_t row, size_t col);
CONVOY_API convoy_status convoy_table_write_csv(const convoy_table* t, const char* path);
/* Writes the CSV and a plotting script that renders it. */
CONVOY_API convoy_status convoy_table_write_plot(const convoy_table* t, const char* csv_path, const char* script_path);
CONVOY_API void convoy_table_free(convoy_table* t);

/* Pure functions */
CONVOY_API convoy_status convoy_cone_gain(double beamwidth_deg, double offset_deg, double* out);
CONVOY_API convoy_status convoy_path_gain(double distance_m, double carrier_freq_hz, double* out);
CONVOY_API convoy_status convoy_link_capacity(double sinr, double bandwidth_hz, double* out);
/* scheme: baseline_802_15_3c, dsrc_scheme1 or dsrc_scheme2; cfg may be NULL for default timing. */
CONVOY_API convoy_status convoy_alignment_overhead(const convoy_config* cfg, const char* scheme, double beamwidth_deg,
                                                   double* out);

#ifdef __cplusplus
}
#endif

#endif
