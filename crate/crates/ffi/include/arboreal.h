#ifndef ARBOREAL_H
#define ARBOREAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ArbMode {
  ARB_MODE_FULL = 0,
  ARB_MODE_INTRO = 1,
} ArbMode;

typedef enum ArbStatus {
  ARB_STATUS_OK = 0,
  ARB_STATUS_NULL_POINTER = 1,
  ARB_STATUS_INVALID_UTF8 = 2,
  ARB_STATUS_PARSE = 3,
  ARB_STATUS_VALIDATION = 4,
  ARB_STATUS_COMPOSITION = 5,
  ARB_STATUS_DOMAIN = 6,
  ARB_STATUS_NUMERICAL = 7,
  ARB_STATUS_INVALID_GERM = 8,
  ARB_STATUS_CONSTANTS = 9,
  ARB_STATUS_NOT_ARBOREAL = 10,
  ARB_STATUS_SIZE_GUARD = 11,
  ARB_STATUS_INTERNAL = 12,
  ARB_STATUS_IO = 13,
  ARB_STATUS_JSON = 14,
  ARB_STATUS_PANIC = 15,
} ArbStatus;

/**
 * Opaque expansion: the input germ and its arboreal graph.
 */
typedef struct ArbExpansion ArbExpansion;

/**
 * Opaque rooted tree.
 */
typedef struct ArbTree ArbTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *arb_last_error(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void arb_string_free(char *s);

/**
 * Parse `(root (child ...) ...)` text into a new tree handle.
 *
 * # Safety
 * `text` must be a valid C string and `out` a valid pointer.
 */
enum ArbStatus arb_tree_parse(const char *text, struct ArbTree **out);

/**
 * # Safety
 * `tree` must come from [`arb_tree_parse`] and not have been freed; null is ignored.
 */
void arb_tree_free(struct ArbTree *tree);

/**
 * Number of vertices, or 0 for a null handle.
 *
 * # Safety
 * `tree` must be null or a live handle.
 */
size_t arb_tree_size(const struct ArbTree *tree);

/**
 * Canonical text of the tree, or null for a null handle.
 *
 * # Safety
 * `tree` must be null or a live handle.
 */
char *arb_tree_to_text(const struct ArbTree *tree);

/**
 * Size of the correspondence poset.
 *
 * # Safety
 * `tree` must be a live handle and `out` a valid pointer.
 */
enum ArbStatus arb_poset_size(const struct ArbTree *tree, size_t *out);

/**
 * Reduced rational Betti numbers of the link: `out_betti[k]` for `k < capacity`,
 * with the number of degrees written to `out_len`. An empty link has no degrees.
 *
 * # Safety
 * `tree` must be a live handle, `out_betti` valid for `capacity` writes, `out_len` valid.
 */
enum ArbStatus arb_link_betti(const struct ArbTree *tree,
                              uint64_t *out_betti,
                              size_t capacity,
                              size_t *out_len);

/**
 * Multiplicativity check over all composable pairs; trees above six vertices are refused.
 *
 * # Safety
 * `tree` must be a live handle; `out_pairs` and `out_passed` valid pointers.
 */
enum ArbStatus arb_functor_check(const struct ArbTree *tree, size_t *out_pairs, bool *out_passed);

/**
 * JSON of a bundled germ (`line`, `example15`, `crossing`, `star1` .. `star8`), or null.
 *
 * # Safety
 * `name` must be null or a valid C string.
 */
char *arb_corpus_germ(const char *name);

/**
 * Expand a germ given as JSON, drawing constants from `seed` with the default ranges.
 *
 * # Safety
 * `germ_json` must be a valid C string and `out` a valid pointer.
 */
enum ArbStatus arb_expand(const char *germ_json,
                          uint64_t seed,
                          uint32_t mode,
                          struct ArbExpansion **out);

/**
 * # Safety
 * `exp` must come from [`arb_expand`] and not have been freed; null is ignored.
 */
void arb_expansion_free(struct ArbExpansion *exp);

/**
 * Node census such as `"A2:2 END:2"`, or null for a null handle.
 *
 * # Safety
 * `exp` must be null or a live handle.
 */
char *arb_expansion_census(const struct ArbExpansion *exp);

/**
 * Graph JSON, or null for a null handle.
 *
 * # Safety
 * `exp` must be null or a live handle.
 */
char *arb_expansion_graph_json(const struct ArbExpansion *exp);

/**
 * SVG picture of the germ and its expansion, or null for a null handle.
 *
 * # Safety
 * `exp` must be null or a live handle.
 */
char *arb_expansion_svg(const struct ArbExpansion *exp);

/**
 * Rank of the global K_0 sections and the number of invariant factors above one.
 *
 * # Safety
 * `exp` must be a live handle; `out_rank` and `out_torsion` valid pointers.
 */
enum ArbStatus arb_expansion_sections(const struct ArbExpansion *exp,
                                      size_t *out_rank,
                                      size_t *out_torsion);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARBOREAL_H */
