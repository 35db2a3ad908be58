#ifndef LEVYLAB_H
#define LEVYLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LlStatus {
  LL_STATUS_OK = 0,
  LL_STATUS_NULL_POINTER = 1,
  LL_STATUS_INVALID_UTF8 = 2,
  LL_STATUS_INVALID_ARGUMENT = 3,
  LL_STATUS_UNKNOWN_SERIES = 4,
  LL_STATUS_TOO_LARGE = 5,
  LL_STATUS_BUDGET_EXCEEDED = 6,
  LL_STATUS_PRECONDITION = 7,
  LL_STATUS_BUFFER_TOO_SMALL = 8,
  LL_STATUS_PANIC = 9,
} LlStatus;

/**
 * A catalog series.
 */
typedef struct LlSeries LlSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the next call.
 */
const char *ll_last_error(void);

/**
 * Library version, static.
 */
const char *ll_version(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ll_string_free(char *s);

/**
 * Opens a catalog series by id, e.g. `"C8"`.
 *
 * # Safety
 * `id` must be a nul-terminated string and `out` writable.
 */
enum LlStatus ll_series_open(const char *id, struct LlSeries **out);

/**
 * # Safety
 * `s` must come from [`ll_series_open`] and not have been freed. NULL is ignored.
 */
void ll_series_free(struct LlSeries *s);

/**
 * Term `n` (1-based) in floating point.
 *
 * # Safety
 * `s` must be a live handle; `x` and `y` writable.
 */
enum LlStatus ll_series_term(const struct LlSeries *s, uint64_t n, double *x, double *y);

/**
 * Term `n` as JSON; rational series give `"p/q"` strings.
 *
 * # Safety
 * `s` must be a live handle; `out` writable.
 */
enum LlStatus ll_series_term_json(const struct LlSeries *s, uint64_t n, char **out);

/**
 * Partial sum of the first `n` terms in floating point.
 *
 * # Safety
 * `s` must be a live handle; `x` and `y` writable.
 */
enum LlStatus ll_partial_sum(const struct LlSeries *s, uint64_t n, double *x, double *y);

/**
 * Achievement certificate toward `(tx, ty)` as JSON.
 *
 * # Safety
 * `s` must be a live handle; `out` writable.
 */
enum LlStatus ll_achieve(const struct LlSeries *s,
                         double tx,
                         double ty,
                         uint32_t depth,
                         uint64_t budget,
                         char **out);

/**
 * Subsums of the first `terms` terms within `tol` of the target. Coordinates and
 * tolerance are decimal or `p/q` strings. Result is a JSON array.
 *
 * # Safety
 * `s` must be a live handle, string arguments nul-terminated, `out` writable.
 */
enum LlStatus ll_oracle(const struct LlSeries *s,
                        uint32_t terms,
                        const char *tx,
                        const char *ty,
                        const char *tol,
                        char **out);

/**
 * Fills `counts` (row-major, row 0 at the top, `width*height` entries) with a
 * density raster of random subsums. `region` is `{x_min, x_max, y_min, y_max}`.
 * `outside` receives the samples that missed the region.
 *
 * # Safety
 * `s` must be a live handle, `counts` must hold `len` values, `region` four, and `outside` be writable.
 */
enum LlStatus ll_raster(const struct LlSeries *s,
                        uint32_t terms,
                        uint64_t samples,
                        const double *region,
                        size_t width,
                        size_t height,
                        uint64_t seed,
                        uint64_t *counts,
                        size_t len,
                        uint64_t *outside);

/**
 * Runs the verification suite. `only` may be NULL, a criterion number or a module
 * name. `passed` receives 1 when every selected criterion holds.
 *
 * # Safety
 * `only` must be NULL or nul-terminated; `passed` and `out` writable.
 */
enum LlStatus ll_verify(const char *only, int32_t *passed, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEVYLAB_H */
