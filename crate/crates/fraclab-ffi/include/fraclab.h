#ifndef FRACLAB_H
#define FRACLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FraclabStatus {
  FRACLAB_STATUS_OK = 0,
  FRACLAB_STATUS_DOMAIN = 1,
  FRACLAB_STATUS_POLE = 2,
  FRACLAB_STATUS_OVERFLOW = 3,
  FRACLAB_STATUS_NON_CONVERGENCE = 4,
  FRACLAB_STATUS_PRECONDITION = 5,
  FRACLAB_STATUS_ILL_CONDITIONED = 6,
  FRACLAB_STATUS_RANK_DEFICIENT = 7,
  FRACLAB_STATUS_CONFIG = 8,
  FRACLAB_STATUS_IO = 9,
  FRACLAB_STATUS_NULL_POINTER = 10,
  FRACLAB_STATUS_INVALID_UTF8 = 11,
  FRACLAB_STATUS_BUFFER_TOO_SMALL = 12,
  FRACLAB_STATUS_PANIC = 13,
} FraclabStatus;

// Opaque handle to an ambient (n, s).
typedef struct FraclabAmbient FraclabAmbient;

// Opaque handle to a bubble family.
typedef struct FraclabFamily FraclabFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated) and
// returns the full message length in bytes, excluding the terminator. Pass a null
// `buf` to query the length.
//
// # Safety
// `buf` must be null or point to `cap` writable bytes.
size_t fraclab_last_error_message(char *buf, size_t cap);

// Γ(x).
//
// # Safety
// `out` must be valid for a write.
enum FraclabStatus fraclab_gamma(double x, double *out);

// Gauss hypergeometric ₂F₁(a, b; c; z) for real arguments.
//
// # Safety
// `out` must be valid for a write.
enum FraclabStatus fraclab_hyp2f1(double a, double b, double c, double z, double *out);

// Creates an ambient handle for dimension `n` and order `s` (requires n > 2s).
//
// # Safety
// `out` must be valid for a write.
enum FraclabStatus fraclab_ambient_new(uint32_t n, double s, struct FraclabAmbient **out);

// # Safety
// `amb` must be null or a handle from [`fraclab_ambient_new`] not yet freed.
void fraclab_ambient_free(struct FraclabAmbient *amb);

// Critical exponent p = (n+2s)/(n-2s).
//
// # Safety
// `amb` must be a live handle, `out` valid for a write.
enum FraclabStatus fraclab_ambient_p(const struct FraclabAmbient *amb, double *out);

// Bubble energy ‖U‖² in Ḣ^s.
//
// # Safety
// `amb` must be a live handle, `out` valid for a write.
enum FraclabStatus fraclab_ambient_energy(const struct FraclabAmbient *amb, double *out);

// Value of the bubble U[0, λ] at radius r.
//
// # Safety
// `amb` must be a live handle, `out` valid for a write.
enum FraclabStatus fraclab_bubble_radial(const struct FraclabAmbient *amb,
                                         double lambda,
                                         double r,
                                         double *out);

// Maximum relative residual of (-Δ)^s U = U^p over the radii in `grid`.
//
// # Safety
// `grid` must point to `len` doubles, `out` valid for a write.
enum FraclabStatus fraclab_check_bubble_pde(uint32_t n,
                                            double s,
                                            const double *grid,
                                            size_t len,
                                            double *out);

// Radial Galerkin eigenvalues of the linearised operator, ascending. Writes
// `basis_size` values into `out`, which must hold at least that many.
//
// # Safety
// `amb` must be a live handle and `out` must point to `cap` writable doubles.
enum FraclabStatus fraclab_spectral_radial(const struct FraclabAmbient *amb,
                                           size_t basis_size,
                                           double *out,
                                           size_t cap);

// Parses a family from JSON `{"n":..,"s":..,"bubbles":[{"z":[..],"lambda":..}],"alphas":[..]}`.
//
// # Safety
// `json` must be a NUL-terminated string, `out` valid for a write.
enum FraclabStatus fraclab_family_from_json(const char *json, struct FraclabFamily **out);

// # Safety
// `fam` must be null or a handle from [`fraclab_family_from_json`] not yet freed.
void fraclab_family_free(struct FraclabFamily *fam);

// Number of bubbles in the family.
//
// # Safety
// `fam` must be a live handle, `out` valid for a write.
enum FraclabStatus fraclab_family_len(const struct FraclabFamily *fam, size_t *out);

// σ(x) = Σ α_i U_i(x); `x` has `len` = n coordinates.
//
// # Safety
// `fam` must be a live handle, `x` must point to `len` doubles, `out` valid for a write.
enum FraclabStatus fraclab_family_sigma(const struct FraclabFamily *fam,
                                        const double *x,
                                        size_t len,
                                        double *out);

// Interaction Q = max_{i≠j} q_ij of the family.
//
// # Safety
// `fam` must be a live handle, `out` valid for a write.
enum FraclabStatus fraclab_family_q(const struct FraclabFamily *fam, double *out);

// Deficit Γ = ‖(-Δ)^s σ - |σ|^{p-1}σ‖ in H^{-s} for σ the family sum.
//
// # Safety
// `fam` must be a live handle, `out` valid for a write.
enum FraclabStatus fraclab_family_deficit(const struct FraclabFamily *fam, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACLAB_H */
