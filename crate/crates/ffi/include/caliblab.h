#ifndef CALIBLAB_H
#define CALIBLAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CaliblabStatus {
  CALIBLAB_STATUS_OK = 0,
  CALIBLAB_STATUS_NULL_POINTER = 1,
  CALIBLAB_STATUS_INVALID_ARGUMENT = 2,
  CALIBLAB_STATUS_NUMERICAL = 3,
  CALIBLAB_STATUS_BUFFER_TOO_SMALL = 4,
  CALIBLAB_STATUS_PANIC = 5,
} CaliblabStatus;

/**
 * A constant-coefficient differential form.
 */
typedef struct CaliblabForm CaliblabForm;

/**
 * Structure data of one case.
 */
typedef struct CaliblabKit CaliblabKit;

/**
 * A catalog patch.
 */
typedef struct CaliblabPatch CaliblabPatch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated).
 * Returns the message length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t caliblab_last_error_message(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *caliblab_version(void);

/**
 * Create the standard kit of a case: "um" (with m and k), "associative",
 * "coassociative" or "cayley". m and k are ignored for the other cases.
 *
 * # Safety
 * `case_name` must be a NUL-terminated string, `out` a valid pointer.
 */
enum CaliblabStatus caliblab_kit_new(const char *case_name,
                                     uintptr_t m,
                                     uintptr_t k,
                                     struct CaliblabKit **out);

/**
 * # Safety
 * `kit` must be null or a handle from `caliblab_kit_new` not yet freed.
 */
void caliblab_kit_free(struct CaliblabKit *kit);

/**
 * Ambient dimension n and calibrated dimension k of a kit.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CaliblabStatus caliblab_kit_dims(const struct CaliblabKit *kit, uintptr_t *n, uintptr_t *k);

/**
 * Run the exact contraction identities of a G2 or Spin(7) kit. `corrupt`
 * flips one structure constant first (negative control).
 *
 * # Safety
 * All pointers must be valid.
 */
enum CaliblabStatus caliblab_identity_check(const struct CaliblabKit *kit,
                                            bool corrupt,
                                            uintptr_t *families,
                                            int64_t *max_violation);

/**
 * μ(v₁, …, v_k) for k vectors of length n stored one after another.
 *
 * # Safety
 * `vectors` must hold `count * n` doubles, `out` must be valid.
 */
enum CaliblabStatus caliblab_calibration_value(const struct CaliblabKit *kit,
                                               const double *vectors,
                                               uintptr_t count,
                                               double *out);

/**
 * The G2 cross product x × y into `out` (7 doubles each).
 *
 * # Safety
 * `x`, `y` and `out` must each hold 7 doubles.
 */
enum CaliblabStatus caliblab_cross_product(const struct CaliblabKit *kit,
                                           const double *x,
                                           const double *y,
                                           double *out);

/**
 * Parse a form such as "e123 + e145 - 2 e167" in dimension n.
 *
 * # Safety
 * `text` must be NUL-terminated, `out` valid.
 */
enum CaliblabStatus caliblab_form_parse(uintptr_t n, const char *text, struct CaliblabForm **out);

/**
 * # Safety
 * `form` must be null or a live handle.
 */
void caliblab_form_free(struct CaliblabForm *form);

/**
 * Dimension, degree and coefficient count of a form.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CaliblabStatus caliblab_form_shape(const struct CaliblabForm *form,
                                        uintptr_t *n,
                                        uintptr_t *degree,
                                        uintptr_t *len);

/**
 * Copy the coefficients, in lexicographic order of increasing multi-indices.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum CaliblabStatus caliblab_form_coeffs(const struct CaliblabForm *form,
                                         double *buf,
                                         uintptr_t len);

/**
 * a ∧ b as a new handle.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CaliblabStatus caliblab_form_wedge(const struct CaliblabForm *a,
                                        const struct CaliblabForm *b,
                                        struct CaliblabForm **out);

/**
 * Euclidean Hodge star as a new handle.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CaliblabStatus caliblab_form_hodge_star(const struct CaliblabForm *a,
                                             struct CaliblabForm **out);

/**
 * Look up a catalog patch by id.
 *
 * # Safety
 * `id` must be NUL-terminated, `out` valid.
 */
enum CaliblabStatus caliblab_patch_new(const char *id, struct CaliblabPatch **out);

/**
 * # Safety
 * `patch` must be null or a live handle.
 */
void caliblab_patch_free(struct CaliblabPatch *patch);

/**
 * Euclidean volume by Gauss–Legendre quadrature.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CaliblabStatus caliblab_patch_volume(const struct CaliblabPatch *patch,
                                          uintptr_t order,
                                          uintptr_t cells,
                                          double *out);

/**
 * Theorem A with one random generator drawn from `seed`: writes the first
 * variation ½∫Tr_g h vol, the largest pointwise integrand error, and whether
 * every expected claim held.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CaliblabStatus caliblab_theorem_a(const struct CaliblabKit *kit,
                                       const struct CaliblabPatch *patch,
                                       uint64_t seed,
                                       uintptr_t order,
                                       double *first_variation,
                                       double *integrand_error,
                                       bool *passed);

/**
 * The Theorem B defect integral of a patch; zero iff it is calibrated.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CaliblabStatus caliblab_theorem_b_defect(const struct CaliblabKit *kit,
                                              const struct CaliblabPatch *patch,
                                              uintptr_t order,
                                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CALIBLAB_H */
