#ifndef AUGSPEC_H
#define AUGSPEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Weighted graph with its sub-class layout.
 */
typedef struct AugspecGraph AugspecGraph;

/**
 * `n x K` label matrix.
 */
typedef struct AugspecLabels AugspecLabels;

/**
 * `n x p` embedding.
 */
typedef struct AugspecRepresentation AugspecRepresentation;

/**
 * Eigenpairs of a normalized graph.
 */
typedef struct AugspecSpectrum AugspecSpectrum;

typedef int32_t AugspecStatus;

#define AUGSPEC_OK 0

#define AUGSPEC_NULL_POINTER 1

#define AUGSPEC_INVALID_ARGUMENT 2

#define AUGSPEC_DIMENSION_MISMATCH 3

#define AUGSPEC_NUMERICAL 4

#define AUGSPEC_PANIC 5

#define AUGSPEC_BUFFER_TOO_SMALL 6

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated)
 * and stores the byte count it needs, including the terminator, in `needed`.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null with `len == 0`.
 */
AugspecStatus augspec_last_error(char *buf, size_t len, size_t *needed);

/**
 * Synthesizes a graph over `k_bar` sub-classes with the given slack targets.
 *
 * # Safety
 * `sizes` and `class_of` must hold `k_bar` entries; `out` must be writable.
 */
AugspecStatus augspec_graph_synthesize(size_t classes,
                                       const size_t *sizes,
                                       const size_t *class_of,
                                       size_t k_bar,
                                       double delta,
                                       double xi,
                                       double base_weight,
                                       uint64_t seed,
                                       struct AugspecGraph **out);

/**
 * Wraps a row-major `n x n` weight matrix.
 *
 * # Safety
 * `weights` must hold `n * n` values; structure arrays `k_bar` entries.
 */
AugspecStatus augspec_graph_from_weights(size_t n,
                                         const double *weights,
                                         size_t classes,
                                         const size_t *sizes,
                                         const size_t *class_of,
                                         size_t k_bar,
                                         struct AugspecGraph **out);

/**
 * Number of points in a graph, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t augspec_graph_n(const struct AugspecGraph *graph);

/**
 * Measured compactness, its column-ratio form, and distinguishability.
 *
 * # Safety
 * `graph` must be a live handle; outputs must be writable.
 */
AugspecStatus augspec_graph_measure(const struct AugspecGraph *graph,
                                    double *delta,
                                    double *delta_prime_out,
                                    double *xi);

/**
 * # Safety
 * `graph` must be null or a handle not yet freed.
 */
void augspec_graph_free(struct AugspecGraph *graph);

/**
 * Normalizes and eigendecomposes a graph.
 *
 * # Safety
 * `graph` must be a live handle; `out` must be writable.
 */
AugspecStatus augspec_spectrum_compute(const struct AugspecGraph *graph,
                                       struct AugspecSpectrum **out);

/**
 * Copies the `n` descending eigenvalues into `buf`.
 *
 * # Safety
 * `buf` must be valid for `len` doubles.
 */
AugspecStatus augspec_spectrum_eigenvalues(const struct AugspecSpectrum *spectrum,
                                           double *buf,
                                           size_t len);

/**
 * # Safety
 * `spectrum` must be null or a handle not yet freed.
 */
void augspec_spectrum_free(struct AugspecSpectrum *spectrum);

/**
 * Builds the rank-`p` embedding, rotated by a seeded orthogonal matrix when
 * `rotate` is set.
 *
 * # Safety
 * `spectrum` must be a live handle; `out` must be writable.
 */
AugspecStatus augspec_representation_build(const struct AugspecSpectrum *spectrum,
                                           size_t p,
                                           bool rotate,
                                           uint64_t rotation_seed,
                                           struct AugspecRepresentation **out);

/**
 * # Safety
 * `rep` must be a live handle; `rows` and `cols` must be writable.
 */
AugspecStatus augspec_representation_shape(const struct AugspecRepresentation *rep,
                                           size_t *rows,
                                           size_t *cols);

/**
 * Copies the embedding row-major into `buf`.
 *
 * # Safety
 * `buf` must be valid for `len` doubles.
 */
AugspecStatus augspec_representation_values(const struct AugspecRepresentation *rep,
                                            double *buf,
                                            size_t len);

/**
 * # Safety
 * `rep` must be null or a handle not yet freed.
 */
void augspec_representation_free(struct AugspecRepresentation *rep);

/**
 * One-hot class labels for a graph's points.
 *
 * # Safety
 * `graph` must be a live handle; `out` must be writable.
 */
AugspecStatus augspec_labels_clean(const struct AugspecGraph *graph, struct AugspecLabels **out);

/**
 * Clean labels plus i.i.d. `N(0, sigma^2 / K)` noise.
 *
 * # Safety
 * `clean` must be a live handle; `out` must be writable.
 */
AugspecStatus augspec_labels_gaussian(const struct AugspecLabels *clean,
                                      double sigma,
                                      uint64_t seed,
                                      struct AugspecLabels **out);

/**
 * Symmetric label flips at rate `alpha` in every sub-class of `graph`.
 *
 * # Safety
 * `graph` and `clean` must be live handles; `out` must be writable.
 */
AugspecStatus augspec_labels_flip_symmetric(const struct AugspecGraph *graph,
                                            const struct AugspecLabels *clean,
                                            double alpha,
                                            uint64_t seed,
                                            struct AugspecLabels **out);

/**
 * # Safety
 * `labels` must be null or a handle not yet freed.
 */
void augspec_labels_free(struct AugspecLabels *labels);

/**
 * Fits the ridge probe on `noisy` and scores it against `clean`.
 *
 * # Safety
 * Handles must be live; outputs must be writable.
 */
AugspecStatus augspec_probe_evaluate(const struct AugspecRepresentation *rep,
                                     const struct AugspecLabels *noisy,
                                     const struct AugspecLabels *clean,
                                     double beta,
                                     double *mse,
                                     double *accuracy);

/**
 * Exact expected bias and variance of the probe under Gaussian label noise.
 *
 * # Safety
 * Handles must be live; outputs must be writable.
 */
AugspecStatus augspec_expected_error(const struct AugspecSpectrum *spectrum,
                                     size_t p,
                                     const struct AugspecLabels *clean,
                                     double beta,
                                     double sigma,
                                     double *bias_sq,
                                     double *variance);

/**
 * Largest flip rate with a clean-recovery guarantee; `guaranteed` is false
 * when `delta` is too large for any.
 *
 * # Safety
 * Outputs must be writable.
 */
AugspecStatus augspec_flip_tolerance(size_t classes,
                                     size_t subclasses,
                                     size_t n_min,
                                     size_t n_max,
                                     double c_max,
                                     double delta,
                                     double beta,
                                     size_t p,
                                     double *alpha_max,
                                     bool *guaranteed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUGSPEC_H */
