#ifndef BERGMAN_LAB_H
#define BERGMAN_LAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every exported function.
typedef enum BlStatus {
  BL_STATUS_OK = 0,
  BL_STATUS_NULL_POINTER = 1,
  // Malformed argument: bad UTF-8, unknown preset, zero length.
  BL_STATUS_INVALID_ARGUMENT = 2,
  BL_STATUS_DOMAIN = 3,
  BL_STATUS_CAPACITY = 4,
  BL_STATUS_RANK_DEFICIENT = 5,
  BL_STATUS_NUMERICAL = 6,
  BL_STATUS_DEGENERATE = 7,
  BL_STATUS_SIGNATURE_MISMATCH = 8,
  BL_STATUS_INVARIANT = 9,
  // The caller's buffer is too short; the required length was written.
  BL_STATUS_BUFFER_TOO_SMALL = 10,
  BL_STATUS_PANIC = 11,
} BlStatus;

// Orthonormal basis of `H^q(P¹, L^k)` for a weight preset.
typedef struct BlSectionSpace BlSectionSpace;

// Galerkin eigenpairs of the model Laplacian on `(0, q)`-forms.
typedef struct BlSpectralSlice BlSpectralSlice;

// A point on the projective line: the affine coordinate `z = re + i·im`, or,
// when `inverted` is set, the point `1/w` with `w = re + i·im` (so `w = 0`
// is infinity).
typedef struct BlChartPoint {
  double re;
  double im;
  bool inverted;
} BlChartPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error of this thread into `buf` (NUL-terminated,
// truncated to `cap`) and returns the full length without the NUL.
size_t bl_last_error_message(char *buf, size_t cap);

// `∫ ∏|zᵢ|^{2aᵢ} e^{-Σλᵢ|zᵢ|²} dV` for positive `λ`.
enum BlStatus bl_gaussian_moment(const uint32_t *a, const double *lambda, size_t n, double *result);

// Closed-form model Bergman density at the origin.
enum BlStatus bl_model_kernel_origin(const double *lambda, size_t n, size_t q, double *result);

// Truncated Fock kernel on the diagonal. `z` holds `n` complex numbers as
// interleaved `(re, im)` pairs.
enum BlStatus bl_fock_kernel(const double *lambda,
                             size_t n,
                             size_t degree,
                             const double *z,
                             double *result);

// Morse density of a projective-line preset at a point.
enum BlStatus bl_morse_density(const char *preset_name,
                               struct BlChartPoint point,
                               size_t q,
                               double *result);

// Builds `H^q(P¹, L^k)` for a preset such as `"perturbed(1, 3)"`.
enum BlStatus bl_section_space_new(const char *preset_name,
                                   uint32_t k,
                                   size_t q,
                                   struct BlSectionSpace **space);

// Releases a section space. Null is ignored.
void bl_section_space_free(struct BlSectionSpace *space);

enum BlStatus bl_section_space_dimension(const struct BlSectionSpace *space, size_t *result);

enum BlStatus bl_section_space_bergman_at(const struct BlSectionSpace *space,
                                          struct BlChartPoint point,
                                          double *result);

enum BlStatus bl_section_space_extremal_at(const struct BlSectionSpace *space,
                                           struct BlChartPoint point,
                                           double *result);

// Assembles the Galerkin slice of the model weight `Σ λᵢ|zᵢ|²` on
// `(0, q)`-forms with trial degree `degree`.
enum BlStatus bl_spectral_slice_new(const double *lambda,
                                    size_t n,
                                    size_t q,
                                    size_t degree,
                                    struct BlSpectralSlice **slice_out);

// Releases a spectral slice. Null is ignored.
void bl_spectral_slice_free(struct BlSpectralSlice *slice);

// Writes the ascending eigenvalues into `buf`. `len` receives the count;
// if it exceeds `cap`, nothing is copied and `BufferTooSmall` is returned.
enum BlStatus bl_spectral_slice_eigenvalues(const struct BlSpectralSlice *slice,
                                            double *buf,
                                            size_t cap,
                                            size_t *len);

// `B_{≤ν}(z)` from the slice; `z` holds `n` interleaved `(re, im)` pairs.
enum BlStatus bl_spectral_slice_low_energy_bergman(const struct BlSpectralSlice *slice,
                                                   double nu,
                                                   const double *z,
                                                   size_t n,
                                                   double *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BERGMAN_LAB_H */
