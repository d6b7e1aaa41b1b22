#ifndef V2V_H
#define V2V_H

/* C interface to the v2v core. Everything returns a status code; the
 * message for the last failure on this thread is kept in v2v_last_error().
 * Handles are opaque and must be released with the matching _free call. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct v2v_config v2v_config;
typedef struct v2v_model v2v_model;

typedef enum v2v_status {
    V2V_OK = 0,
    V2V_E_VALIDATION = 1, /* bad input, contract failure, failed claim */
    V2V_E_INTERNAL = 2
} v2v_status;

/* Message for the most recent failure on the calling thread; empty string
 * when the last call succeeded. The pointer stays valid until the next
 * v2v_* call on the same thread. */
const char* v2v_last_error(void);

/* Newline-joined artifact paths written by the most recent command on the
 * calling thread. Same lifetime rules as v2v_last_error. */
const char* v2v_last_artifacts(void);

/* Newline-joined PASS/FAIL lines from the most recent v2v_verify call. */
const char* v2v_last_log(void);

/* profile is "desk" or "paper". NULL on failure. */
v2v_config* v2v_config_create(const char* profile);

/* Parse a key = value config file. NULL on failure. */
v2v_config* v2v_config_load(const char* path);

v2v_status v2v_config_set(v2v_config* cfg, const char* key, const char* value);

/* Canonical value string for one key, or NULL on unknown key. Valid until
 * the next v2v_* call on the same thread. */
const char* v2v_config_get(const v2v_config* cfg, const char* key);

/* Full resolved config, one "key = value" line per key. */
const char* v2v_config_echo(const v2v_config* cfg);

/* Overrides train.seed and data.seed together (the --seed flag). */
v2v_status v2v_config_override_seed(v2v_config* cfg, uint64_t seed);

void v2v_config_free(v2v_config* cfg);

/* Commands. Artifact paths land in v2v_last_artifacts(). */
v2v_status v2v_synth(const v2v_config* cfg, const char* out_dir);
v2v_status v2v_features(const v2v_config* cfg, const char* corpus_dir, const char* out_dir);
v2v_status v2v_train(const v2v_config* cfg, const char* shard_path, const char* out_dir);
v2v_status v2v_enhance(const v2v_config* cfg, const char* model_path, const char* noisy_wav,
                       const char* out_wav);

/* names/paths are parallel arrays of n_models entries. */
v2v_status v2v_eval(const v2v_config* cfg, const char* const* names, const char* const* paths,
                    size_t n_models, const char* corpus_dir, const char* features_dir,
                    const char* out_dir);

/* claim is one of lemma1, lemma2, theorem1, rademacher, losses-equivalence.
 * all_hold (optional) receives 1 when every report held. A failed claim
 * returns V2V_E_VALIDATION. */
v2v_status v2v_verify(const v2v_config* cfg, const char* claim, const char* out_dir,
                      int* all_hold);

/* Trained model access, for embedding the regression without the CLI. */
v2v_model* v2v_model_load(const char* path);
size_t v2v_model_input_dim(const v2v_model* model);
size_t v2v_model_output_dim(const v2v_model* model);

/* x has in_dim entries, y receives out_dim entries. */
v2v_status v2v_model_forward(const v2v_model* model, const double* x, size_t in_dim,
                             double* y, size_t out_dim);

void v2v_model_free(v2v_model* model);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* V2V_H */
