#ifndef LEXQA_H
#define LEXQA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum {
  LEXQA_STATUS_OK = 0,
  LEXQA_STATUS_NULL_ARGUMENT = 1,
  LEXQA_STATUS_INVALID_UTF8 = 2,
  LEXQA_STATUS_IO = 3,
  LEXQA_STATUS_PARSE = 4,
  LEXQA_STATUS_INVALID_PARAMS = 5,
  LEXQA_STATUS_UNKNOWN_ARTICLE = 6,
  LEXQA_STATUS_NO_CLASSIFIER = 7,
  LEXQA_STATUS_BUFFER_TOO_SMALL = 8,
  LEXQA_STATUS_INTERNAL = 9,
} LexqaStatus;

/**
 * Opaque engine handle.
 */
typedef struct LexqaEngine LexqaEngine;

/**
 * Ranker parameters. `i_art` is derived as `1 - i_q`.
 */
typedef struct {
  uint32_t k;
  double i_q;
  double confidence_thresh;
  double reference_thresh;
} LexqaParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Writes the built-in parameter values to `out`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `LexqaParams`.
 */
LexqaStatus lexqa_params_default(LexqaParams *out);

/**
 * Loads a statute file, builds the model and returns a handle in `out`.
 *
 * `pairs_path` (JSONL training pairs) and `params` may be null.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `params` must be null or
 * valid; `out` must point to writable storage for one pointer.
 */
LexqaStatus lexqa_engine_new(const char *statutes_path,
                             const char *pairs_path,
                             const LexqaParams *params,
                             LexqaEngine **out);

/**
 * Loads word vectors used by the distributional feature.
 *
 * # Safety
 * `engine` must be a live handle; `path` NUL-terminated.
 */
LexqaStatus lexqa_engine_load_vectors(LexqaEngine *engine, const char *path);

/**
 * Loads a trained entailment classifier.
 *
 * # Safety
 * `engine` must be a live handle; `path` NUL-terminated.
 */
LexqaStatus lexqa_engine_load_boost(LexqaEngine *engine, const char *path);

/**
 * Loads a question-side term dictionary.
 *
 * # Safety
 * `engine` must be a live handle; `path` NUL-terminated.
 */
LexqaStatus lexqa_engine_load_dict(LexqaEngine *engine, const char *path);

/**
 * Ranks articles for `question`. `out_json` receives
 * `{"ranked":[{"id":..,"score":..}],"answer":[..]}`.
 *
 * # Safety
 * `engine` must be a live handle; `question` NUL-terminated; `out_json`
 * writable. Free the result with `lexqa_string_free`.
 */
LexqaStatus lexqa_engine_retrieve(const LexqaEngine *engine, const char *question, char **out_json);

/**
 * Retrieves and classifies. `out_label` receives 1 for YES and 0 for NO;
 * `out_margin` the normalized vote margin. Either may be null.
 *
 * # Safety
 * `engine` must be a live handle; `question` NUL-terminated.
 */
LexqaStatus lexqa_engine_answer(const LexqaEngine *engine,
                                const char *question,
                                int32_t *out_label,
                                double *out_margin);

/**
 * Writes the feature vector of `question` against the comma-separated
 * `article_ids` (joined into one evidence text) into `out`, which must hold
 * `lexqa_feature_count()` values.
 *
 * # Safety
 * `engine` must be a live handle; strings NUL-terminated; `out` must point to
 * `len` writable doubles.
 */
LexqaStatus lexqa_engine_features(const LexqaEngine *engine,
                                  const char *question,
                                  const char *article_ids,
                                  double *out,
                                  size_t len);

/**
 * Number of entailment features.
 */
size_t lexqa_feature_count(void);

/**
 * Releases an engine. Null is ignored.
 *
 * # Safety
 * `engine` must be null or a handle from `lexqa_engine_new` not yet freed.
 */
void lexqa_engine_free(LexqaEngine *engine);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void lexqa_string_free(char *s);

/**
 * Message of the last failure on this thread; empty after a success. Valid
 * until the next call on the same thread.
 */
const char *lexqa_last_error(void);

/**
 * Library version, static.
 */
const char *lexqa_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEXQA_H */
