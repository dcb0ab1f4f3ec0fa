#ifndef COBRIDGE_H
#define COBRIDGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CobridgeStatus {
  COBRIDGE_STATUS_OK = 0,
  COBRIDGE_STATUS_NULL_POINTER = 1,
  COBRIDGE_STATUS_INVALID_ARGUMENT = 2,
  COBRIDGE_STATUS_INDEX_OUT_OF_RANGE = 3,
  COBRIDGE_STATUS_EMPTY_GRAPH = 4,
  COBRIDGE_STATUS_INTERNAL = 5,
  COBRIDGE_STATUS_PANIC = 6,
} CobridgeStatus;

typedef enum CobridgeLogBase {
  COBRIDGE_LOG_BASE_NATURAL = 0,
  COBRIDGE_LOG_BASE_TWO = 1,
  COBRIDGE_LOG_BASE_TEN = 2,
} CobridgeLogBase;

// Two-mode graph handle.
typedef struct CobridgeBipartite CobridgeBipartite;

// Partition handle.
typedef struct CobridgePartition CobridgePartition;

// Weighted one-mode graph handle.
typedef struct CobridgeWeighted CobridgeWeighted;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *cobridge_last_error(void);

// Library version as a static NUL-terminated string.
const char *cobridge_version(void);

// # Safety
// `out` must be a valid pointer to a handle slot.
enum CobridgeStatus cobridge_bipartite_new(size_t left_count,
                                           size_t right_count,
                                           struct CobridgeBipartite **out);

// # Safety
// `graph` must be NULL or a handle from `cobridge_bipartite_new`.
void cobridge_bipartite_free(struct CobridgeBipartite *graph);

// Adds the edge `left`-`right`. `added` (may be NULL) receives 1 for a new
// edge and 0 for a duplicate.
//
// # Safety
// `graph` must be a live handle; `added` must be NULL or writable.
enum CobridgeStatus cobridge_bipartite_add_edge(struct CobridgeBipartite *graph,
                                                size_t left,
                                                size_t right,
                                                uint8_t *added);

// # Safety
// `graph` must be a live handle.
size_t cobridge_bipartite_edge_count(const struct CobridgeBipartite *graph);

// Article projection: idf-weighted cosine similarity, keeping weights
// strictly above `threshold`.
//
// # Safety
// `graph` must be a live handle and `out` a valid handle slot.
enum CobridgeStatus cobridge_project_articles(const struct CobridgeBipartite *graph,
                                              enum CobridgeLogBase log_base,
                                              double threshold,
                                              struct CobridgeWeighted **out);

// Concept co-occurrence projection with unit weights.
//
// # Safety
// `graph` must be a live handle and `out` a valid handle slot.
enum CobridgeStatus cobridge_project_concepts(const struct CobridgeBipartite *graph,
                                              struct CobridgeWeighted **out);

// Builds a weighted graph from `len` parallel arrays of endpoints and
// weights.
//
// # Safety
// The three arrays must each hold `len` elements; `out` must be a valid
// handle slot.
enum CobridgeStatus cobridge_weighted_new(size_t node_count,
                                          const uint32_t *sources,
                                          const uint32_t *targets,
                                          const double *weights,
                                          size_t len,
                                          struct CobridgeWeighted **out);

// # Safety
// `graph` must be NULL or a weighted-graph handle.
void cobridge_weighted_free(struct CobridgeWeighted *graph);

// # Safety
// `graph` must be a live handle.
size_t cobridge_weighted_node_count(const struct CobridgeWeighted *graph);

// # Safety
// `graph` must be a live handle.
size_t cobridge_weighted_edge_count(const struct CobridgeWeighted *graph);

// Edge `index` in canonical (sorted, `u <= v`) order.
//
// # Safety
// `graph` must be a live handle; the output pointers must be writable.
enum CobridgeStatus cobridge_weighted_edge(const struct CobridgeWeighted *graph,
                                           size_t index,
                                           uint32_t *u,
                                           uint32_t *v,
                                           double *weight);

// Weighted modularity of `labels` (one per node).
//
// # Safety
// `labels` must hold `len` elements; `out` must be writable.
enum CobridgeStatus cobridge_modularity_unipartite(const struct CobridgeWeighted *graph,
                                                   const uint32_t *labels,
                                                   size_t len,
                                                   double *out);

// Bipartite modularity of `labels` over the combined index space (Left
// nodes first, then Right).
//
// # Safety
// `labels` must hold `len` elements; `out` must be writable.
enum CobridgeStatus cobridge_modularity_bipartite(const struct CobridgeBipartite *graph,
                                                  const uint32_t *labels,
                                                  size_t len,
                                                  double *out);

// Best of `runs` Louvain runs with seeds `base_seed + i`.
//
// # Safety
// `graph` must be a live handle and `out` a valid handle slot.
enum CobridgeStatus cobridge_cluster_unipartite(const struct CobridgeWeighted *graph,
                                                size_t runs,
                                                uint64_t base_seed,
                                                struct CobridgePartition **out);

// Bipartite counterpart of [`cobridge_cluster_unipartite`].
//
// # Safety
// `graph` must be a live handle and `out` a valid handle slot.
enum CobridgeStatus cobridge_cluster_bipartite(const struct CobridgeBipartite *graph,
                                               size_t runs,
                                               uint64_t base_seed,
                                               struct CobridgePartition **out);

// # Safety
// `partition` must be NULL or a partition handle.
void cobridge_partition_free(struct CobridgePartition *partition);

// # Safety
// `partition` must be a live handle.
size_t cobridge_partition_node_count(const struct CobridgePartition *partition);

// # Safety
// `partition` must be a live handle.
size_t cobridge_partition_community_count(const struct CobridgePartition *partition);

// Modularity of the partition, NaN for a NULL handle.
//
// # Safety
// `partition` must be a live handle.
double cobridge_partition_score(const struct CobridgePartition *partition);

// # Safety
// `partition` must be a live handle.
uint64_t cobridge_partition_seed(const struct CobridgePartition *partition);

// Copies the community of every node into `buffer`, which must hold
// exactly `node_count` elements.
//
// # Safety
// `buffer` must be writable for `len` elements.
enum CobridgeStatus cobridge_partition_labels(const struct CobridgePartition *partition,
                                              uint32_t *buffer,
                                              size_t len);

// Normalized mutual information (arithmetic mean) of two labelings.
//
// # Safety
// `a` and `b` must each hold `len` elements; `out` must be writable.
enum CobridgeStatus cobridge_nmi(const uint32_t *a, const uint32_t *b, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COBRIDGE_H */
