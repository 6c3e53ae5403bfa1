#ifndef MIMGAN_MIMGAN_H
#define MIMGAN_MIMGAN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MIMGAN_BUILDING)
#    define MIMGAN_API __declspec(dllexport)
#  else
#    define MIMGAN_API __declspec(dllimport)
#  endif
#else
#  define MIMGAN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every call returns a status; on failure mimgan_last_error() holds a
 * message for the calling thread until its next failing call. */
typedef enum mimgan_status {
  MIMGAN_OK = 0,
  MIMGAN_INVALID_ARGUMENT = 1, /* null handle or pointer */
  MIMGAN_CONFIG = 2,           /* unknown key, bad value, failed precondition */
  MIMGAN_NUMERIC = 3,          /* non-finite values, failed gradient check */
  MIMGAN_IO = 4,               /* unreadable input, malformed file */
  MIMGAN_VERSION = 5,          /* checkpoint from another format version */
  MIMGAN_DOMAIN = 6,           /* value outside an operation's domain */
  MIMGAN_SHAPE = 7,            /* mismatched dimensions */
  MIMGAN_INTERNAL = 8
} mimgan_status;

typedef struct mimgan_config mimgan_config;
typedef struct mimgan_model mimgan_model;
typedef struct mimgan_text mimgan_text;

MIMGAN_API const char* mimgan_version(void);
MIMGAN_API uint32_t mimgan_checkpoint_format(void);
MIMGAN_API const char* mimgan_status_name(mimgan_status status);
MIMGAN_API const char* mimgan_last_error(void);

/* Owned strings returned by the library. */
MIMGAN_API const char* mimgan_text_data(const mimgan_text* text);
MIMGAN_API size_t mimgan_text_size(const mimgan_text* text);
MIMGAN_API void mimgan_text_free(mimgan_text* text);

/* Layered run configuration. Precedence, lowest first: built-in defaults,
 * environment (MIMGAN_<KEY>), config file, explicit sets. Layers can be
 * filled in any order; values are validated when a layer is added and the
 * merged result is validated when a workflow starts. */
MIMGAN_API mimgan_status mimgan_config_create(mimgan_config** out);
MIMGAN_API void mimgan_config_free(mimgan_config* config);
/* Flat `key = value` lines; `#` starts a comment. */
MIMGAN_API mimgan_status mimgan_config_load_file(mimgan_config* config, const char* path);
MIMGAN_API mimgan_status mimgan_config_apply_env(mimgan_config* config);
MIMGAN_API mimgan_status mimgan_config_set(mimgan_config* config, const char* key, const char* value);
/* Effective value after merging all layers. */
MIMGAN_API mimgan_status mimgan_config_get(const mimgan_config* config, const char* key, mimgan_text** out);
/* Every key as `key = value  # origin`, sorted. */
MIMGAN_API mimgan_status mimgan_config_dump(const mimgan_config* config, mimgan_text** out);

/* Trains on the configured data and writes config.effective, metrics.csv
 * and the checkpoint into the output directory. `resume` may be NULL. On
 * MIMGAN_NUMERIC the error message names the saved pre-failure snapshot. */
MIMGAN_API mimgan_status mimgan_train(const mimgan_config* config, const char* resume, mimgan_text** report);
/* Scores the configured data with the configured checkpoint; writes
 * scores.csv, window_scores.csv and summary.txt. `summary` may be NULL. */
MIMGAN_API mimgan_status mimgan_detect(const mimgan_config* config, mimgan_text** summary);
/* `spec` holds `key = value` lines for the synthetic generator (n, T,
 * contamination, anomaly_kinds, ...); NULL or empty uses the defaults. */
MIMGAN_API mimgan_status mimgan_synth(const char* spec, uint64_t seed, const char* path, mimgan_text** report);
/* Point-wise metrics between the label columns of two CSV files. */
MIMGAN_API mimgan_status mimgan_eval(const char* predictions, const char* truth, const char* label_column,
                                     mimgan_text** report);
/* Runs the finite-difference suite over `seeds` seeds. Returns
 * MIMGAN_NUMERIC when any relative error reaches `tolerance`; the report is
 * produced either way. */
MIMGAN_API mimgan_status mimgan_gradcheck(size_t seeds, uint64_t base_seed, double tolerance, mimgan_text** report);

MIMGAN_API mimgan_status mimgan_model_load(const char* checkpoint, mimgan_model** out);
MIMGAN_API void mimgan_model_free(mimgan_model* model);
/* Network shape, training progress and stored configuration. */
MIMGAN_API mimgan_status mimgan_model_info(const mimgan_model* model, mimgan_text** out);

#ifdef __cplusplus
}
#endif

#endif
