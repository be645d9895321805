#ifndef QFTLAB_H
#define QFTLAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QftlabStatus {
  QFTLAB_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  QFTLAB_STATUS_NULL_POINTER = 1,
  /**
   * An argument or configuration was rejected.
   */
  QFTLAB_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The computation ran but failed a numerical-health check.
   */
  QFTLAB_STATUS_NUMERICAL = 3,
  /**
   * A file could not be read or written.
   */
  QFTLAB_STATUS_IO = 4,
  /**
   * Internal panic; the library state is still usable.
   */
  QFTLAB_STATUS_PANIC = 5,
} QftlabStatus;

/**
 * A validated experiment configuration.
 */
typedef struct QftlabConfig QftlabConfig;

/**
 * A band-limited field on the sphere.
 */
typedef struct QftlabField QftlabField;

/**
 * One member of the mollifier family.
 */
typedef struct QftlabMollifier QftlabMollifier;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *qftlab_last_error(void);

/**
 * Clears the stored error message of this thread.
 */
void qftlab_clear_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qftlab_version(void);

/**
 * Parses and validates a JSON configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum QftlabStatus qftlab_config_from_json(const char *json, struct QftlabConfig **out);

/**
 * # Safety
 * `config` must come from [`qftlab_config_from_json`] or be null.
 */
void qftlab_config_free(struct QftlabConfig *config);

/**
 * Runs a CLI command (e.g. `"scaling-limit"`) and writes its report into
 * `out_dir`. `passed` receives 1 when every suite passes, else 0.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum QftlabStatus qftlab_run(const struct QftlabConfig *config,
                             const char *command,
                             const char *out_dir,
                             int32_t *passed);

/**
 * Field of dimension `dim` and cutoff `cutoff` from its harmonic
 * coefficients; `len` must equal [`qftlab_basis_len`].
 *
 * # Safety
 * `coeffs` must point to `len` doubles and `out` be writable.
 */
enum QftlabStatus qftlab_field_new(size_t dim,
                                   size_t cutoff,
                                   const double *coeffs,
                                   size_t len,
                                   struct QftlabField **out);

/**
 * # Safety
 * `field` must come from this library or be null.
 */
void qftlab_field_free(struct QftlabField *field);

/**
 * Number of coefficients of a field with the given dimension and cutoff,
 * or 0 for an unsupported dimension.
 */
size_t qftlab_basis_len(size_t dim, size_t cutoff);

/**
 * Copies up to `len` coefficients into `out`; `written` receives the
 * field's full coefficient count.
 *
 * # Safety
 * `out` must have room for `len` doubles.
 */
enum QftlabStatus qftlab_field_coeffs(const struct QftlabField *field,
                                      double *out,
                                      size_t len,
                                      size_t *written);

/**
 * Value of the field at a unit vector of length `dim + 1`.
 *
 * # Safety
 * `point` must point to `len` doubles and `value` be writable.
 */
enum QftlabStatus qftlab_field_eval(const struct QftlabField *field,
                                    const double *point,
                                    size_t len,
                                    double *value);

/**
 * The mollifier `A_k` on fields of dimension `dim` up to `cutoff`.
 *
 * # Safety
 * `out` must be writable.
 */
enum QftlabStatus qftlab_mollifier_new(size_t k,
                                       size_t dim,
                                       size_t cutoff,
                                       struct QftlabMollifier **out);

/**
 * # Safety
 * `mollifier` must come from this library or be null.
 */
void qftlab_mollifier_free(struct QftlabMollifier *mollifier);

/**
 * Smooths `field` into a newly allocated field.
 *
 * # Safety
 * Handles must be valid and `out` writable.
 */
enum QftlabStatus qftlab_mollify(const struct QftlabMollifier *mollifier,
                                 const struct QftlabField *field,
                                 struct QftlabField **out);

/**
 * `exp(-½ ⟨f, C f⟩)` for the free sphere covariance of mass `mass` at the
 * field's cutoff.
 *
 * # Safety
 * `field` must be valid and the outputs writable.
 */
enum QftlabStatus qftlab_free_char_functional(double mass,
                                              const struct QftlabField *field,
                                              double *re,
                                              double *im);

/**
 * Wick power `:xⁿ:_c` of each of `len` values, written to `out`.
 *
 * # Safety
 * `values` and `out` must each hold `len` doubles.
 */
enum QftlabStatus qftlab_wick_power(const double *values,
                                    size_t len,
                                    size_t n,
                                    double c,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QFTLAB_H */
