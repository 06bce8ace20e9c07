#ifndef MNW_H
#define MNW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define MNW_OK 0

#define MNW_ERR_NULL 1

#define MNW_ERR_INVALID_PARAMS 2

#define MNW_ERR_IO 3

#define MNW_ERR_RESOURCE_CAP 4

#define MNW_ERR_CONVERGENCE 5

#define MNW_ERR_FORMAT 6

#define MNW_ERR_PANIC 7

#define MNW_ERR_BUFFER_TOO_SMALL 8

/**
 * Opaque graph handle. Free with [`mnw_graph_free`].
 */
typedef struct MnwGraph MnwGraph;

/**
 * Model parameters, laid out for C.
 */
typedef struct MnwParams {
  uint32_t d;
  uint32_t n;
  double alpha;
  double beta;
  double sigma;
  double zeta;
  uint64_t seed;
} MnwParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to fit. Returns the full message length
 * without the terminator. `buf` may be null when `len` is 0.
 *
 * # Safety
 * `buf` must be valid for `len` bytes of writes.
 */
size_t mnw_last_error_message(char *buf, size_t len);

/**
 * Samples a graph.
 *
 * # Safety
 * `params` must point to a valid `MnwParams`; `out` must be writable.
 */
int32_t mnw_generate(const struct MnwParams *params, struct MnwGraph **out_graph);

/**
 * Reads an `mnw v1` edge-list file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out_graph` must be writable.
 */
int32_t mnw_graph_load(const char *path, struct MnwGraph **out_graph);

/**
 * Writes the graph's edge list.
 *
 * # Safety
 * `graph` must come from this library; `path` must be a NUL-terminated string.
 */
int32_t mnw_graph_save(const struct MnwGraph *graph, const char *path);

/**
 * Releases a graph. Null is ignored.
 *
 * # Safety
 * `graph` must come from this library and not be used afterwards.
 */
void mnw_graph_free(struct MnwGraph *graph);

/**
 * # Safety
 * `graph` must come from this library; `out_count` must be writable.
 */
int32_t mnw_graph_vertex_count(const struct MnwGraph *graph, uint64_t *out_count);

/**
 * Edges of the simple graph, torus and long.
 *
 * # Safety
 * `graph` must come from this library; `out_count` must be writable.
 */
int32_t mnw_graph_edge_count(const struct MnwGraph *graph, uint64_t *out_count);

/**
 * Long edges as sampled, before merging with torus edges.
 *
 * # Safety
 * `graph` must come from this library; `out_count` must be writable.
 */
int32_t mnw_graph_long_edge_count(const struct MnwGraph *graph, uint64_t *out_count);

/**
 * # Safety
 * `graph` must come from this library; `out_degree` must be writable.
 */
int32_t mnw_graph_max_degree(const struct MnwGraph *graph, uint32_t *out_degree);

/**
 * Hop diameter. With `sampled` nonzero, the maximum eccentricity over `k`
 * random sources and `*out_exact` is 0.
 *
 * # Safety
 * `graph` must come from this library; out-pointers must be writable.
 */
int32_t mnw_diameter(const struct MnwGraph *graph,
                     int32_t sampled,
                     uint32_t k,
                     uint64_t seed,
                     uint32_t *out_value,
                     int32_t *out_exact);

/**
 * Hop distances from `source` into `buf`, which must hold one entry per
 * vertex.
 *
 * # Safety
 * `graph` must come from this library; `buf` must be valid for `len` writes.
 */
int32_t mnw_bfs(const struct MnwGraph *graph, uint32_t source, uint32_t *buf, size_t len);

/**
 * Mixing time of the lazy walk. All starts unless `sampled` is nonzero, in
 * which case `k` random starts plus one far vertex give a lower bound.
 *
 * # Safety
 * `graph` must come from this library; out-pointers must be writable.
 */
int32_t mnw_mixing_time(const struct MnwGraph *graph,
                        int32_t sampled,
                        uint32_t k,
                        uint64_t seed,
                        uint64_t max_steps,
                        uint64_t *out_t_mix,
                        int32_t *out_exact);

/**
 * `1 - λ₁` of the lazy walk by power iteration.
 *
 * # Safety
 * `graph` must come from this library; `out_gap` must be writable.
 */
int32_t mnw_spectral_gap(const struct MnwGraph *graph,
                         double tol,
                         uint64_t max_iterations,
                         double *out_gap);

/**
 * Exact conductance for graphs of at most 24 vertices.
 *
 * # Safety
 * `graph` must come from this library; `out_value` must be writable.
 */
int32_t mnw_conductance_exact(const struct MnwGraph *graph, double *out_value);

/**
 * Exact edge isoperimetric constant for graphs of at most 24 vertices.
 *
 * # Safety
 * `graph` must come from this library; `out_value` must be writable.
 */
int32_t mnw_isoperimetric_exact(const struct MnwGraph *graph, double *out_value);

/**
 * # Safety
 * `out_value` must be writable.
 */
int32_t mnw_rate_i(double z, double p, double *out_value);

/**
 * # Safety
 * `out_value` must be writable.
 */
int32_t mnw_gamma_rate(double z, double *out_value);

/**
 * `P(Z >= zn)` when `upper` is nonzero, else `P(Z <= zn)`, for
 * `Z ~ Binomial(n, p)`.
 *
 * # Safety
 * `out_value` must be writable.
 */
int32_t mnw_binomial_tail(uint64_t n, double p, double z, int32_t upper, double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MNW_H */
