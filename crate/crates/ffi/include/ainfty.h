#ifndef AINFTY_H
#define AINFTY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum AinftyStatus {
  AINFTY_STATUS_OK = 0,
  AINFTY_STATUS_NULL_POINTER = 1,
  AINFTY_STATUS_INVALID_UTF8 = 2,
  /**
   * The input document does not parse or fails validation.
   */
  AINFTY_STATUS_INVALID_DOCUMENT = 3,
  /**
   * Unknown estimator name or out-of-range parameter.
   */
  AINFTY_STATUS_INVALID_ARGUMENT = 4,
  AINFTY_STATUS_INDEX_OUT_OF_RANGE = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  AINFTY_STATUS_INTERNAL = 6,
} AinftyStatus;

/**
 * A parsed filtration together with its weights.
 */
typedef struct AinftyDocument AinftyDocument;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer. On
 * success `*out` holds a handle to release with [`ainfty_document_free`].
 */
enum AinftyStatus ainfty_document_parse(const char *json, struct AinftyDocument **out);

/**
 * Releases a document handle. Null is ignored.
 *
 * # Safety
 * `doc` must come from [`ainfty_document_parse`] and not be used afterwards.
 */
void ainfty_document_free(struct AinftyDocument *doc);

/**
 * Number of weights in the document, or 0 for a null handle.
 *
 * # Safety
 * `doc` must be null or a live handle.
 */
size_t ainfty_document_weight_count(const struct AinftyDocument *doc);

/**
 * Number of leaves of the filtration, or 0 for a null handle.
 *
 * # Safety
 * `doc` must be null or a live handle.
 */
size_t ainfty_document_leaf_count(const struct AinftyDocument *doc);

/**
 * Writes the full JSON report of every weight, on the default grids.
 *
 * # Safety
 * `doc` must be a live handle and `out` a valid pointer. The string written
 * to `*out` is released with [`ainfty_string_free`].
 */
enum AinftyStatus ainfty_analyze_json(const struct AinftyDocument *doc, char **out);

/**
 * Evaluates one constant, named like `ap:2` or `aexp`, for the weight at
 * `weight_index`.
 *
 * # Safety
 * `doc` must be a live handle, `name` a NUL-terminated string and `out` a
 * valid pointer.
 */
enum AinftyStatus ainfty_constant(const struct AinftyDocument *doc,
                                  size_t weight_index,
                                  const char *name,
                                  double *out);

/**
 * Runs the verifier suite on every weight and writes the results as JSON
 * lines. `*failed` receives the number of failing checks; a failing check
 * is not an error.
 *
 * # Safety
 * `doc` must be a live handle; `failed` and `out` must be valid pointers.
 */
enum AinftyStatus ainfty_verify_json_lines(const struct AinftyDocument *doc,
                                           bool corrupt,
                                           size_t *failed,
                                           char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ainfty_string_free(char *s);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *ainfty_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AINFTY_H */
