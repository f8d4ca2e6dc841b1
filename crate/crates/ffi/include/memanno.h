#ifndef MEMANNO_H
#define MEMANNO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum MemannoStatus {
  MEMANNO_STATUS_OK = 0,
  MEMANNO_STATUS_NULL_ARGUMENT = 1,
  MEMANNO_STATUS_INVALID_UTF8 = 2,
  MEMANNO_STATUS_CORPUS = 3,
  MEMANNO_STATUS_PARSE = 4,
  MEMANNO_STATUS_EMIT = 5,
  MEMANNO_STATUS_IO = 6,
  MEMANNO_STATUS_PANIC = 7,
} MemannoStatus;

typedef struct MemannoAnnotations MemannoAnnotations;

typedef struct MemannoCorpus MemannoCorpus;

/**
 * Scoring result. `precision` and `recall` are NaN when undefined.
 */
typedef struct MemannoScore {
  size_t tp;
  size_t fp;
  size_t fn_;
  double precision;
  double recall;
} MemannoScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static string.
 */
const char *memanno_version(void);

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into the library from the same thread.
 */
const char *memanno_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void memanno_string_free(char *s);

/**
 * Scan and extract the C sources under `root` with default options.
 *
 * # Safety
 * `root` must be a NUL-terminated string; `out` must be writable.
 */
enum MemannoStatus memanno_corpus_scan(const char *root, struct MemannoCorpus **out);

/**
 * Number of extracted functions; 0 for NULL.
 *
 * # Safety
 * `corpus` must be NULL or a live handle.
 */
size_t memanno_corpus_function_count(const struct MemannoCorpus *corpus);

/**
 * # Safety
 * `corpus` must be NULL or a handle not yet freed.
 */
void memanno_corpus_free(struct MemannoCorpus *corpus);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MemannoStatus memanno_annotations_load(const char *path, struct MemannoAnnotations **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum MemannoStatus memanno_annotations_from_json(const char *json, struct MemannoAnnotations **out);

/**
 * Name-and-signature heuristic over a corpus.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be writable.
 */
enum MemannoStatus memanno_annotations_heuristic(const struct MemannoCorpus *corpus,
                                                 struct MemannoAnnotations **out);

/**
 * Number of annotated functions; 0 for NULL.
 *
 * # Safety
 * `set` must be NULL or a live handle.
 */
size_t memanno_annotations_len(const struct MemannoAnnotations *set);

/**
 * # Safety
 * `set` must be NULL or a handle not yet freed.
 */
void memanno_annotations_free(struct MemannoAnnotations *set);

/**
 * Cooddy JSON. Arities come from `corpus` when given, otherwise from the
 * annotation file.
 *
 * # Safety
 * `set` must be a live handle, `corpus` NULL or a live handle, `out` writable.
 */
enum MemannoStatus memanno_emit_cooddy(const struct MemannoAnnotations *set,
                                       const struct MemannoCorpus *corpus,
                                       char **out);

/**
 * CodeQL allocation model table. `dropped` may be NULL.
 *
 * # Safety
 * `set` must be a live handle, `out` writable.
 */
enum MemannoStatus memanno_emit_codeql(const struct MemannoAnnotations *set,
                                       char **out,
                                       size_t *dropped);

/**
 * Score `predicted` against `ground_truth`.
 *
 * # Safety
 * Both sets must be live handles; `out` must be writable.
 */
enum MemannoStatus memanno_score(const struct MemannoAnnotations *predicted,
                                 const struct MemannoAnnotations *ground_truth,
                                 bool strict_slots,
                                 struct MemannoScore *out);

/**
 * Leak check with the stock builtin table. `set` may be NULL for a run
 * without annotations. The JSON report goes to `report` (may be NULL) and
 * the warning count to `total` (may be NULL).
 *
 * # Safety
 * `corpus` must be a live handle, `set` NULL or a live handle.
 */
enum MemannoStatus memanno_check(const struct MemannoCorpus *corpus,
                                 const struct MemannoAnnotations *set,
                                 char **report,
                                 size_t *total);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEMANNO_H */
