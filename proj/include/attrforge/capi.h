#ifndef ATTRFORGE_CAPI_H
#define ATTRFORGE_CAPI_H

/* C interface to the attrforge pipeline engine. All functions are
 * synchronous. Status codes match the CLI exit codes. */

#ifdef __cplusplus
extern "C" {
#endif

typedef struct af_engine af_engine;

typedef enum af_status {
  AF_OK = 0,
  AF_ERR_VALIDATION = 1,
  AF_ERR_BACKEND_UNREACHABLE = 2,
  AF_ERR_PARTIAL_FAILURE = 3,
  AF_ERR_INTERNAL = 4
} af_status;

/* Engines start from built-in defaults (all backends mocked). Layer
 * config sources before the first run call: file, then explicit sets,
 * then environment overrides, highest precedence last. */
af_engine* af_engine_new(void);
void af_engine_free(af_engine* engine);

af_status af_engine_load_config(af_engine* engine, const char* path);
/* key is a dotted path into the config document, e.g. "global_seed" or
 * "backends.generator.base_url". value is parsed as JSON when possible,
 * otherwise taken as a string. */
af_status af_engine_set(af_engine* engine, const char* key,
                        const char* value);
af_status af_engine_apply_env(af_engine* engine);
af_status af_engine_force_mock(af_engine* engine);

af_status af_run_synth(af_engine* engine, int force);
af_status af_run_iterate(af_engine* engine, int iteration, int force);
af_status af_run_eval(af_engine* engine, const char* predictions_path,
                      const char* adapter, int force);
/* On AF_OK, *out is a NUL-terminated report owned by the caller; release
 * it with af_string_free. */
af_status af_run_report(af_engine* engine, int as_json, char** out);

/* Message for the most recent failing call on this engine, or "" if the
 * last call succeeded. Owned by the engine; valid until the next call. */
const char* af_last_error(const af_engine* engine);
void af_string_free(char* s);
const char* af_version(void);

#ifdef __cplusplus
}
#endif

#endif /* ATTRFORGE_CAPI_H */
