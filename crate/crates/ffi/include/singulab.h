#ifndef SINGULAB_H
#define SINGULAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SgStatus {
  SG_STATUS_OK = 0,
  SG_STATUS_NULL_POINTER = 1,
  SG_STATUS_INVALID_UTF8 = 2,
  SG_STATUS_PARSE = 3,
  SG_STATUS_SCHEMA = 4,
  SG_STATUS_IO = 5,
  SG_STATUS_INVALID_ARGUMENT = 6,
  SG_STATUS_PANIC = 7,
} SgStatus;

/**
 * A validated germ document.
 */
typedef struct SgGerm SgGerm;

/**
 * A parsed polynomial.
 */
typedef struct SgPoly SgPoly;

/**
 * The outcome of one command on one germ.
 */
typedef struct SgReport SgReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if it succeeded.
 * The pointer stays valid until the next call on this thread.
 */
const char *sg_last_error_message(void);

/**
 * Parses `text` as a polynomial in the `nvars` variable names `vars`.
 *
 * # Safety
 * `text` and each of `vars[0..nvars]` must be valid C strings; `out` must
 * be writable.
 */
enum SgStatus sg_poly_parse(const char *text,
                            const char *const *vars,
                            size_t nvars,
                            struct SgPoly **out);

/**
 * Number of variables of `poly`.
 *
 * # Safety
 * `poly` must be a live handle from [`sg_poly_parse`]; `out` writable.
 */
enum SgStatus sg_poly_nvars(const struct SgPoly *poly, size_t *out);

/**
 * Evaluates `poly` at the point `x[0..n]`.
 *
 * # Safety
 * `poly` must be a live handle, `x` must point to `n` doubles and `out`
 * must be writable.
 */
enum SgStatus sg_poly_eval(const struct SgPoly *poly, const double *x, size_t n, double *out);

/**
 * # Safety
 * `poly` must be null or a live handle; it is invalid afterwards.
 */
void sg_poly_free(struct SgPoly *poly);

/**
 * Loads and validates a germ file.
 *
 * # Safety
 * `path` must be a valid C string; `out` must be writable.
 */
enum SgStatus sg_germ_load(const char *path, struct SgGerm **out);

/**
 * Parses and validates a germ document held in memory.
 *
 * # Safety
 * `text` must be a valid C string; `out` must be writable.
 */
enum SgStatus sg_germ_from_toml(const char *text, struct SgGerm **out);

/**
 * Name of the germ; the string is owned by the handle.
 *
 * # Safety
 * `germ` must be a live handle; `out` must be writable.
 */
enum SgStatus sg_germ_name(const struct SgGerm *germ, const char **out);

/**
 * Ambient dimension of the germ.
 *
 * # Safety
 * `germ` must be a live handle; `out` must be writable.
 */
enum SgStatus sg_germ_dimension(const struct SgGerm *germ, size_t *out);

/**
 * # Safety
 * `germ` must be null or a live handle; it is invalid afterwards.
 */
void sg_germ_free(struct SgGerm *germ);

/**
 * Runs one command (`le-greuel`, `corollary`, `lemma-link`,
 * `gauss-bonnet`, `sigma`, `kinematic`, `curv-link` or `density`) on the
 * germ. `samples` = 0 keeps the germ's or the default sample count. A
 * failing check still returns `SG_STATUS_OK` with a report whose pass flag
 * is false.
 *
 * # Safety
 * `germ` must be a live handle, `command` a valid C string and `out`
 * writable.
 */
enum SgStatus sg_run(const struct SgGerm *germ,
                     const char *command,
                     size_t samples,
                     uint64_t seed,
                     struct SgReport **out);

/**
 * Whether every comparison of the report passed.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum SgStatus sg_report_pass(const struct SgReport *report, bool *out);

/**
 * Both sides of the main comparison with their standard errors.
 *
 * # Safety
 * `report` must be a live handle; the four out pointers must be writable.
 */
enum SgStatus sg_report_values(const struct SgReport *report,
                               double *lhs,
                               double *stderr_lhs,
                               double *rhs,
                               double *stderr_rhs);

/**
 * The full report as a TOML document; free it with [`sg_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum SgStatus sg_report_toml(const struct SgReport *report, char **out);

/**
 * # Safety
 * `report` must be null or a live handle; it is invalid afterwards.
 */
void sg_report_free(struct SgReport *report);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void sg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SINGULAB_H */
