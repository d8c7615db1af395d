/*
 * rise: iterative question rewriting with edit policies.
 *
 * Plain C interface. Every function returns a rise_status; on failure the
 * message for the calling thread is available from rise_last_error().
 * Strings returned through char** out-parameters are owned by the caller and
 * must be released with rise_string_free().
 */
#ifndef RISE_RISE_H
#define RISE_RISE_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(RISE_BUILDING_LIBRARY)
#define RISE_API __attribute__((visibility("default")))
#else
#define RISE_API
#endif

typedef enum rise_status {
  RISE_OK = 0,
  RISE_ERR_INVALID_ARGUMENT = 1,
  RISE_ERR_IO = 2,
  RISE_ERR_PARSE = 3,
  RISE_ERR_CONFIG = 4,
  RISE_ERR_VERSION = 5,
  RISE_ERR_SHAPE = 6,
  RISE_ERR_NUMERIC = 7,
  RISE_ERR_INTERNAL = 8
} rise_status;

typedef struct rise_model rise_model;

RISE_API const char* rise_version(void);

/* Message for the last failed call on this thread ("" if none). */
RISE_API const char* rise_last_error(void);

RISE_API void rise_string_free(char* s);

/*
 * Merge a JSON config file (may be NULL), a JSON object of overrides (may be
 * NULL) and the defaults, validate the result for `command` (NULL or "" skips
 * the required-path check) and return the resolved config as JSON.
 */
RISE_API rise_status rise_config_resolve(const char* config_path, const char* overrides_json,
                                         const char* command, char** resolved_json);

/*
 * Batch commands. `config_json` is a resolved config (see rise_config_resolve).
 * `summary_json` receives a short JSON summary; it may be NULL.
 */
RISE_API rise_status rise_cmd_gen_synthetic(const char* config_json, char** summary_json);
RISE_API rise_status rise_cmd_build_vocab(const char* config_json, char** summary_json);
RISE_API rise_status rise_cmd_train(const char* config_json, char** summary_json);
RISE_API rise_status rise_cmd_simplify(const char* config_json, char** summary_json);
RISE_API rise_status rise_cmd_evaluate(const char* config_json, char** summary_json);
RISE_API rise_status rise_cmd_inspect_dps(const char* config_json, char** summary_json);

/* Loaded checkpoint. */
RISE_API rise_status rise_model_load(const char* checkpoint_path, rise_model** model);
RISE_API void rise_model_free(rise_model* model);

/*
 * Rewrite one question. `context_json` is a JSON array of strings (may be
 * NULL). `output` receives the rewritten text, `trace_json` (may be NULL) the
 * per-iteration trace.
 */
RISE_API rise_status rise_model_simplify(const rise_model* model, const char* question,
                                         const char* context_json, unsigned max_iterations,
                                         char** output, char** trace_json);

/* Expectation matrix, cell distributions and one sampled script as JSON. */
RISE_API rise_status rise_model_inspect_dps(const rise_model* model, const char* question,
                                            const char* target, const char* context_json,
                                            unsigned long long seed, char** dump_json);

#ifdef __cplusplus
}
#endif

#endif
