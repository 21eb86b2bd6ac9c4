#ifndef HYPFILL_H
#define HYPFILL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define HF_OK 0

#define HF_ERR_NULL 1

#define HF_ERR_INPUT 2

#define HF_ERR_INVARIANT 3

#define HF_ERR_UNSUPPORTED 4

#define HF_ERR_PANIC 5

/**
 * A graph embedded in a surface.
 */
typedef struct HfGraph HfGraph;

/**
 * A triangulated hyperbolic surface.
 */
typedef struct HfSurface HfSurface;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf`, truncated and
 * NUL-terminated. Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t hf_last_error(char *buf, size_t len);

/**
 * Parses a surface from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_surface` must be writable.
 */
int hf_surface_from_json(const char *json, struct HfSurface **out_surface);

/**
 * Loads a bundled closed surface by name, such as `genus2_deg8`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out_surface` must be writable.
 */
int hf_surface_fixture(const char *name, struct HfSurface **out_surface);

/**
 * # Safety
 * `s` must be null or a handle from this library that has not been freed.
 */
void hf_surface_free(struct HfSurface *s);

/**
 * # Safety
 * `s` must be a live surface handle; `genus` must be writable.
 */
int hf_surface_genus(const struct HfSurface *s, size_t *genus);

/**
 * Shortens the pruned skeleton of a closed surface. `converged` receives 1 or 0.
 *
 * # Safety
 * `s` must be a live surface handle; the output pointers must be writable.
 */
int hf_shorten(const struct HfSurface *s, struct HfGraph **out_graph, int *converged);

/**
 * # Safety
 * `g` must be null or a handle from this library that has not been freed.
 */
void hf_graph_free(struct HfGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle; `length` must be writable.
 */
int hf_graph_length(const struct HfGraph *g, double *length);

/**
 * Serializes a graph to JSON. Release the string with [`hf_string_free`].
 *
 * # Safety
 * `g` must be a live graph handle; `json` must be writable.
 */
int hf_graph_to_json(const struct HfGraph *g, char **json);

/**
 * # Safety
 * `s` must be null or a string returned by this library that has not been freed.
 */
void hf_string_free(char *s);

/**
 * Length of a balanced trivalent graph and of its dual curves.
 *
 * # Safety
 * `g` must be a live graph handle; the output pointers must be writable.
 */
int hf_dual_lengths(const struct HfGraph *g, double *graph_length, double *dual_length);

/**
 * Mean genus and fraction of samples with every cusp degree at least `threshold`.
 *
 * # Safety
 * The output pointers must be writable.
 */
int hf_bm_statistics(size_t n,
                     size_t samples,
                     uint64_t seed,
                     size_t threshold,
                     double *mean_genus,
                     double *frac_large_cusps);

/**
 * # Safety
 * `value` must be writable.
 */
int hf_exact_min(uint64_t genus, double *value);

/**
 * # Safety
 * `value` must be writable.
 */
int hf_collar_half_width(double length, double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPFILL_H */
