#ifndef RELVEC_H
#define RELVEC_H

/* Generated by cbindgen from the relvec-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible call.
 */
typedef enum RvStatus {
  RV_OK = 0,
  /*
   Null pointer, malformed UTF-8, unknown setting or entity name, or an
   invalid flag combination.
   */
  RV_INVALID_ARGUMENT = 1,
  /*
   The file could not be opened or read.
   */
  RV_IO = 2,
  /*
   The file was read but its contents are malformed.
   */
  RV_PARSE = 3,
  /*
   The computation ran but produced no result (for example, no queries
   survive vocabulary intersection).
   */
  RV_FAILED = 4,
  /*
   A panic escaped the library; a bug, please report it.
   */
  RV_INTERNAL = 5,
} RvStatus;

typedef struct RvKnowledgeBase RvKnowledgeBase;

typedef struct RvStore RvStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Description of the most recent failure on this thread. The pointer stays
 valid until the next library call on the same thread; never free it.
 */
const char *rv_last_error_message(void);

/*
 Library version as a static string; never free it.
 */
const char *rv_version(void);

/*
 Loads an embedding store from a word2vec file. `binary_format` selects the
 binary layout (nonzero) or the text layout (zero).

 # Safety
 `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum RvStatus rv_store_open(const char *path, int binary_format, struct RvStore **out);

/*
 Releases a store handle. Null is a no-op.

 # Safety
 `store` must be a handle from `rv_store_open` that has not been freed.
 */
void rv_store_free(struct RvStore *store);

/*
 Embedding dimensionality, or 0 for a null handle.

 # Safety
 `store` must be a live handle or null.
 */
size_t rv_store_dim(const struct RvStore *store);

/*
 Vocabulary size, or 0 for a null handle.

 # Safety
 `store` must be a live handle or null.
 */
size_t rv_store_len(const struct RvStore *store);

/*
 1 when the token is present, 0 otherwise (including on null arguments).

 # Safety
 `store` must be a live handle or null; `token` a valid string or null.
 */
int rv_store_contains(const struct RvStore *store, const char *token);

/*
 Loads and validates a knowledge base. Only `relations` is required; pass
 null for files you do not have.

 # Safety
 `relations` must be a valid string; the optional paths valid strings or
 null; `out` a valid pointer.
 */
enum RvStatus rv_kb_open(const char *relations,
                         const char *pathways,
                         const char *years,
                         const char *names,
                         struct RvKnowledgeBase **out);

/*
 Releases a knowledge-base handle. Null is a no-op.

 # Safety
 `kb` must be a handle from `rv_kb_open` that has not been freed.
 */
void rv_kb_free(struct RvKnowledgeBase *kb);

/*
 Releases a string returned through a `char **` out-parameter.

 # Safety
 `s` must come from this library and not have been freed.
 */
void rv_string_free(char *s);

/*
 Evaluates a setting and writes the JSON report to `out_json`.

 `setting` uses the command-line spelling (G, P1, ..., Gp, ...). Pass
 `has_year = 0` for settings without a year. `use_naive` selects the naive
 estimator; `no_centering` disables centering; `workers = 0` uses all
 cores.

 # Safety
 Handles must be live; `setting` a valid string; `out_json` a valid
 pointer.
 */
enum RvStatus rv_evaluate_json(const struct RvStore *store,
                               const struct RvKnowledgeBase *kb,
                               const char *setting,
                               int has_year,
                               int32_t year,
                               int use_naive,
                               int no_centering,
                               size_t workers,
                               char **out_json);

/*
 Runs the random-permutation baseline and writes the JSON report.

 # Safety
 As `rv_evaluate_json`.
 */
enum RvStatus rv_baseline_json(const struct RvStore *store,
                               const struct RvKnowledgeBase *kb,
                               const char *setting,
                               int has_year,
                               int32_t year,
                               size_t repeats,
                               uint64_t seed,
                               size_t workers,
                               char **out_json);

/*
 Knowledge-base statistics (after vocabulary intersection) as JSON.

 # Safety
 Handles must be live; `out_json` a valid pointer.
 */
enum RvStatus rv_stats_json(const struct RvStore *store,
                            const struct RvKnowledgeBase *kb,
                            int has_year,
                            int32_t year,
                            int per_pathway,
                            char **out_json);

/*
 Ranks the top-k candidates for one query entity and writes TSV rows
 `query<TAB>rank<TAB>entity<TAB>score` to `out_tsv`.

 `query` is a prefixed id (D:... / G:...) or a unique display name.
 `pathway` may be null except for pathway settings.

 # Safety
 Handles must be live; strings valid or (where documented) null; `out_tsv`
 a valid pointer.
 */
enum RvStatus rv_predict_tsv(const struct RvStore *store,
                             const struct RvKnowledgeBase *kb,
                             const char *query,
                             size_t k,
                             const char *setting,
                             int has_year,
                             int32_t year,
                             const char *pathway,
                             int use_naive,
                             int no_centering,
                             char **out_tsv);

/*
 Exports the relation estimate a setting prescribes as JSON
 (`{method, direction, provenance, support, vector}`), for reuse by other
 tooling.

 # Safety
 As `rv_predict_tsv`, without the query argument.
 */
enum RvStatus rv_estimate_json(const struct RvStore *store,
                               const struct RvKnowledgeBase *kb,
                               const char *setting,
                               int has_year,
                               int32_t year,
                               const char *pathway,
                               int use_naive,
                               char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELVEC_H */
