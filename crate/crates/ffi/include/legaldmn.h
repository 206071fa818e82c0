#ifndef LEGALDMN_H
#define LEGALDMN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `LDMN_STATUS_OK` is zero; everything else is an error.
 */
typedef enum ldmn_status {
  LDMN_STATUS_OK = 0,
  LDMN_STATUS_NULL_ARGUMENT = 1,
  LDMN_STATUS_INVALID_UTF8 = 2,
  LDMN_STATUS_IO = 3,
  LDMN_STATUS_PARSE = 4,
  LDMN_STATUS_INVALID = 5,
  LDMN_STATUS_EXECUTION = 6,
  LDMN_STATUS_NOT_TESTABLE = 7,
  LDMN_STATUS_INTERNAL = 8,
} ldmn_status;

/**
 * Opaque decision graph.
 */
typedef struct ldmn_graph ldmn_graph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *ldmn_last_error(void);

/**
 * Library version as a static string.
 */
const char *ldmn_version(void);

/**
 * Loads a DMN file (`.dmn`/`.xml`) or a compact `.json` graph.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum ldmn_status ldmn_graph_load(const char *path, struct ldmn_graph **out);

/**
 * Parses a graph from compact JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum ldmn_status ldmn_graph_from_json(const char *json, struct ldmn_graph **out);

/**
 * Serializes a graph to compact JSON; free the result with `ldmn_string_free`.
 *
 * # Safety
 * `g` must come from this library; `out` must be writable.
 */
enum ldmn_status ldmn_graph_to_json(const struct ldmn_graph *g, char **out);

/**
 * Checks structural validity. Returns `LDMN_STATUS_INVALID` with every violation in
 * the error message when the graph is not well formed.
 *
 * # Safety
 * `g` must come from this library.
 */
enum ldmn_status ldmn_graph_validate(const struct ldmn_graph *g);

/**
 * Executes the graph on a JSON object mapping input ids to values. Writes
 * the execution result as JSON (`output_value`, `node_values`, `errors`).
 *
 * # Safety
 * `g` must come from this library, `assignment` must be a NUL-terminated
 * string and `out` writable.
 */
enum ldmn_status ldmn_execute(const struct ldmn_graph *g,
                              const char *assignment,
                              bool strict,
                              char **out);

/**
 * Normalized shortest-path kernel similarity.
 *
 * # Safety
 * `a` and `b` must come from this library; `out` must be writable.
 */
enum ldmn_status ldmn_sp_similarity(const struct ldmn_graph *a,
                                    const struct ldmn_graph *b,
                                    bool directed,
                                    double *out);

/**
 * Normalized graphlet kernel similarity over sizes 3 to 5. `seed` only
 * matters for graphs large enough to be sampled.
 *
 * # Safety
 * `a` and `b` must come from this library; `out` must be writable.
 */
enum ldmn_status ldmn_graphlet_similarity(const struct ldmn_graph *a,
                                          const struct ldmn_graph *b,
                                          uint64_t seed,
                                          double *out);

/**
 * Fraction of exhaustively generated gold test cases on which the candidate
 * produces the gold outcome. An invalid candidate scores 0; an invalid gold
 * model fails with `LDMN_STATUS_INVALID`. Fails with `LDMN_STATUS_NOT_TESTABLE` when the gold
 * model is outside the default testability caps.
 *
 * # Safety
 * `gold` and `candidate` must come from this library; `out` must be writable.
 */
enum ldmn_status ldmn_equivalence_rate(const struct ldmn_graph *gold,
                                       const struct ldmn_graph *candidate,
                                       double *out);

/**
 * Releases a graph. Null is ignored.
 *
 * # Safety
 * `g` must come from this library and not be used afterwards.
 */
void ldmn_graph_free(struct ldmn_graph *g);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ldmn_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEGALDMN_H */
