#ifndef NFRIS_H
#define NFRIS_H

/* Generated by cbindgen; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum NfrisStatus {
  NFRIS_STATUS_OK = 0,
  NFRIS_STATUS_NULL_POINTER = 1,
  NFRIS_STATUS_DOMAIN = 2,
  NFRIS_STATUS_GEOMETRY = 3,
  NFRIS_STATUS_DIMENSION = 4,
  NFRIS_STATUS_CONFIG = 5,
  NFRIS_STATUS_PANIC = 6,
} NfrisStatus;

typedef enum NfrisRegion {
  NFRIS_REGION_NEAR = 0,
  NFRIS_REGION_FAR = 1,
} NfrisRegion;

typedef enum NfrisPathLoss {
  NFRIS_PATH_LOSS_FREE_SPACE = 0,
  NFRIS_PATH_LOSS_UNIT = 1,
} NfrisPathLoss;

/**
 * Opaque hierarchical codebook.
 */
typedef struct NfrisCodebook NfrisCodebook;

/**
 * Opaque surface or antenna array.
 */
typedef struct NfrisGeometry NfrisGeometry;

/**
 * Opaque cascaded channel set.
 */
typedef struct NfrisLinks NfrisLinks;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`) and returns the full message length plus
 * one. Returns 0 when there is no error.
 */
size_t nfris_last_error_message(char *buf, size_t len);

/**
 * `2D²/λ`.
 */
enum NfrisStatus nfris_rayleigh_distance(double aperture, double lambda, double *out_distance);

/**
 * Planar array of `rows × cols` elements centred at `center[3]` with unit
 * normal `normal[3]`.
 */
enum NfrisStatus nfris_geometry_planar(size_t rows,
                                       size_t cols,
                                       double spacing,
                                       const double *center,
                                       const double *normal,
                                       struct NfrisGeometry **out_geometry);

/**
 * A single antenna at `position[3]`.
 */
enum NfrisStatus nfris_geometry_point(const double *position, struct NfrisGeometry **out_geometry);

void nfris_geometry_free(struct NfrisGeometry *geometry);

enum NfrisStatus nfris_geometry_element_count(const struct NfrisGeometry *geometry,
                                              size_t *out_count);

enum NfrisStatus nfris_geometry_aperture(const struct NfrisGeometry *geometry,
                                         double *out_aperture);

/**
 * Near field iff the distance from the array centre is below the Rayleigh distance.
 */
enum NfrisStatus nfris_classify_region(const struct NfrisGeometry *geometry,
                                       const double *point,
                                       double lambda,
                                       enum NfrisRegion *out_region);

/**
 * Exact spherical-wavefront cascaded channels `tx → ris → rx`.
 */
enum NfrisStatus nfris_links_create(const struct NfrisGeometry *tx,
                                    const struct NfrisGeometry *ris,
                                    const struct NfrisGeometry *rx,
                                    double lambda,
                                    enum NfrisPathLoss path_loss,
                                    struct NfrisLinks **out_links);

void nfris_links_free(struct NfrisLinks *links);

/**
 * `|H_{rx,tx}|²` under the co-phasing profile for that antenna pair.
 */
enum NfrisStatus nfris_cophase_gain(const struct NfrisLinks *links,
                                    size_t rx_index,
                                    size_t tx_index,
                                    double *out_gain);

/**
 * Entropy-based effective rank of a row-major `rows × cols` complex matrix
 * stored as interleaved `(re, im)` pairs.
 */
enum NfrisStatus nfris_effective_rank(size_t rows,
                                      size_t cols,
                                      const double *data,
                                      double *out_rank);

/**
 * Single-user element-wise received-power ascent on the pair `(0, 0)`.
 * `init_phases` may be null (all-zero start). `out_phases` receives the
 * element count of phases.
 */
enum NfrisStatus nfris_elementwise_power(const struct NfrisLinks *links,
                                         const double *init_phases,
                                         size_t max_sweeps,
                                         double tol,
                                         double *out_phases,
                                         double *out_objective,
                                         size_t *out_sweeps,
                                         bool *out_converged);

/**
 * Hierarchical codebook for a line array over the default polar domain.
 */
enum NfrisStatus nfris_codebook_create(const struct NfrisGeometry *ris,
                                       double lambda,
                                       size_t l1,
                                       size_t l2,
                                       size_t distance_branches,
                                       struct NfrisCodebook **out_codebook);

void nfris_codebook_free(struct NfrisCodebook *codebook);

enum NfrisStatus nfris_codebook_pilot_count(const struct NfrisCodebook *codebook,
                                            size_t *out_pilots);

/**
 * One hierarchical training run for a user at `user[3]` served from a
 * single-antenna base station at `bs[3]`. Reports the achieved and the
 * best achievable codeword gain and the pilots used.
 */
enum NfrisStatus nfris_train_hierarchical(const struct NfrisCodebook *codebook,
                                          const double *bs,
                                          const double *user,
                                          double noise_variance,
                                          uint64_t seed,
                                          double *out_achieved,
                                          double *out_truth,
                                          size_t *out_pilots);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NFRIS_H */
