/* C interface to the deepglo forecasting library.
 *
 * Every function returns a deepglo_status. On failure the message is
 * available from deepglo_last_error() until the next call on the same thread.
 * Matrices are passed row-major: row i is series i.
 */
#ifndef DEEPGLO_H
#define DEEPGLO_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(DEEPGLO_BUILDING_LIBRARY)
#define DEEPGLO_API __declspec(dllexport)
#else
#define DEEPGLO_API __declspec(dllimport)
#endif
#else
#define DEEPGLO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum deepglo_status {
  DEEPGLO_OK = 0,
  DEEPGLO_ERR_CONFIG = 1,
  DEEPGLO_ERR_DATA = 2,
  DEEPGLO_ERR_DIVERGED = 3,
  DEEPGLO_ERR_INVALID_ARGUMENT = 4,
  DEEPGLO_ERR_IO = 5,
  DEEPGLO_ERR_INTERNAL = 6
} deepglo_status;

typedef struct deepglo_config deepglo_config;
typedef struct deepglo_model deepglo_model;

typedef struct deepglo_metrics {
  double wape;
  double mape;
  double smape;
  double mae;
  double rmse;
} deepglo_metrics;

DEEPGLO_API const char* deepglo_version(void);
DEEPGLO_API const char* deepglo_status_name(deepglo_status status);
/* Message of the last failed call on this thread; "" if none. */
DEEPGLO_API const char* deepglo_last_error(void);

/* ---- run configuration ---- */

DEEPGLO_API deepglo_status deepglo_config_create(deepglo_config** out);
DEEPGLO_API void deepglo_config_destroy(deepglo_config* config);
DEEPGLO_API deepglo_status deepglo_config_set(deepglo_config* config, const char* key, const char* value);
/* Applies `key = value` lines; later assignments win. */
DEEPGLO_API deepglo_status deepglo_config_apply_text(deepglo_config* config, const char* text);
DEEPGLO_API deepglo_status deepglo_config_load(deepglo_config* config, const char* path);
DEEPGLO_API deepglo_status deepglo_config_validate(const deepglo_config* config);
/* 1 when a seed was assigned explicitly, else 0. */
DEEPGLO_API int deepglo_config_has_seed(const deepglo_config* config);

/* String outputs: *required receives the size including the terminator.
 * When capacity is too small nothing is written and
 * DEEPGLO_ERR_INVALID_ARGUMENT is returned. buffer may be NULL with
 * capacity 0 to query the size. */
DEEPGLO_API deepglo_status deepglo_config_get(const deepglo_config* config, const char* key, char* buffer,
                                              size_t capacity, size_t* required);
/* Fully resolved configuration in the same `key = value` form. */
DEEPGLO_API deepglo_status deepglo_config_render(const deepglo_config* config, char* buffer, size_t capacity,
                                                 size_t* required);

DEEPGLO_API size_t deepglo_config_key_count(void);
/* NULL when index is out of range. */
DEEPGLO_API const char* deepglo_config_key_name(size_t index);
DEEPGLO_API const char* deepglo_config_key_help(size_t index);

/* ---- file-level commands ---- */

/* kind: "local", "global", "deepglo", "dln" or "oracle". trace_path and
 * resolved_config_path may be NULL. */
DEEPGLO_API deepglo_status deepglo_train(const deepglo_config* config, const char* kind, const char* data_path,
                                         const char* checkpoint_path, const char* trace_path,
                                         const char* resolved_config_path);
/* Rolling evaluation with both naive baselines; plot_dir may be NULL. */
DEEPGLO_API deepglo_status deepglo_evaluate(const deepglo_config* config, const char* checkpoint_path,
                                            const char* data_path, const char* report_path, const char* plot_dir);
/* Forecasts predict.horizon columns after the last column of the data. */
DEEPGLO_API deepglo_status deepglo_predict_file(const deepglo_config* config, const char* checkpoint_path,
                                                const char* data_path, const char* output_path);
/* Basis series X (global and deepglo checkpoints). */
DEEPGLO_API deepglo_status deepglo_emit_basis(const char* checkpoint_path, const char* output_path);

/* ---- in-memory models ---- */

DEEPGLO_API deepglo_status deepglo_model_load(const char* checkpoint_path, deepglo_model** out);
DEEPGLO_API void deepglo_model_destroy(deepglo_model* model);
/* Static string, valid for the life of the process. */
DEEPGLO_API const char* deepglo_model_kind(const deepglo_model* model);
DEEPGLO_API deepglo_status deepglo_model_series(const deepglo_model* model, size_t* series);
/* history: [series × length]; output: [series × tau]. */
DEEPGLO_API deepglo_status deepglo_model_predict(const deepglo_model* model, const double* history, size_t series,
                                                 size_t length, size_t tau, double* output);

/* ---- metrics ---- */

/* Undefined metrics (e.g. MAPE without nonzero observations) are NaN. */
DEEPGLO_API deepglo_status deepglo_compute_metrics(const double* observed, const double* predicted, size_t rows,
                                                   size_t cols, deepglo_metrics* out);

#ifdef __cplusplus
}
#endif

#endif /* DEEPGLO_H */
