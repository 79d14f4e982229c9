/* SPDX-License-Identifier: MIT OR Apache-2.0 */

#ifndef TVWIN_H
#define TVWIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum TvwStatus {
  TVW_STATUS_OK = 0,
  TVW_STATUS_NULL_POINTER = 1,
  TVW_STATUS_INVALID_ARGUMENT = 2,
  TVW_STATUS_REJECTED_SAMPLE = 3,
  TVW_STATUS_CORRUPTED_STATE = 4,
  TVW_STATUS_UNDEFINED_RVE = 5,
  TVW_STATUS_PANIC = 6,
} TvwStatus;

/**
 * How a stream picks the cutting point before each slide.
 */
typedef enum TvwCutting {
  /**
   * The lambda chosen by the last restore; `value` is ignored.
   */
  TVW_CUTTING_PREVIOUS_SELECTION = 0,
  /**
   * `value` is the cutting point.
   */
  TVW_CUTTING_FIXED = 1,
  /**
   * `value` in `[0, 1]` is a quantile of the current merge values.
   */
  TVW_CUTTING_QUANTILE = 2,
} TvwCutting;

/**
 * Opaque sliding-window state.
 */
typedef struct TvwStream TvwStream;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *tvw_status_str(enum TvwStatus status);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len - 1` bytes) and returns the full message
 * length without the terminator.
 *
 * # Safety
 * `buf` must be NULL or point to `len` writable bytes.
 */
size_t tvw_last_error_message(char *buf, size_t len);

/**
 * Restores `n` samples at a fixed `lambda` into `u_out`.
 *
 * # Safety
 * `y` and `u_out` hold `n` values; `t` is NULL or holds `n` values.
 */
enum TvwStatus tvw_denoise(const double *y,
                           const double *t,
                           size_t n,
                           double lambda,
                           double *u_out);

/**
 * Restores at an automatically selected lambda; `lambda_out` may be NULL.
 *
 * # Safety
 * As for [`tvw_denoise`]; `lambda_out` is NULL or writable.
 */
enum TvwStatus tvw_denoise_auto(const double *y,
                                const double *t,
                                size_t n,
                                size_t q,
                                double *u_out,
                                double *lambda_out);

/**
 * Writes the merge value of each of the `n - 1` boundaries to
 * `lambdas_out` and, if `drops_out` is not NULL, the extremum-count drop of
 * each merge.
 *
 * # Safety
 * `lambdas_out` (and `drops_out` when given) hold `n - 1` values.
 */
enum TvwStatus tvw_merge_path(const double *y,
                              const double *t,
                              size_t n,
                              double *lambdas_out,
                              uint8_t *drops_out);

/**
 * Robust noise scale from scaled first differences.
 *
 * # Safety
 * `y` holds `n` values; `out` is writable.
 */
enum TvwStatus tvw_mad_sigma(const double *y, size_t n, double *out);

/**
 * Creates a stream over an initial window of `m >= 4` samples.
 *
 * # Safety
 * `y` holds `m` values, `t` is NULL or holds `m` values, `out` is writable.
 * The handle must be released with [`tvw_stream_free`].
 */
enum TvwStatus tvw_stream_new(const double *y,
                              const double *t,
                              size_t m,
                              enum TvwCutting cutting,
                              double value,
                              struct TvwStream **out);

/**
 * Releases a stream; NULL is ignored.
 *
 * # Safety
 * `stream` is NULL or a live handle from [`tvw_stream_new`].
 */
void tvw_stream_free(struct TvwStream *stream);

/**
 * Window length of a stream, 0 for NULL.
 *
 * # Safety
 * `stream` is NULL or a live handle.
 */
size_t tvw_stream_len(const struct TvwStream *stream);

/**
 * Drops the oldest sample and appends `(y, t)`. A rejected sample leaves
 * the stream unchanged.
 *
 * # Safety
 * `stream` is a live handle.
 */
enum TvwStatus tvw_stream_slide(struct TvwStream *stream, double y, double t);

/**
 * Selects lambda on the current window and restores it. Each output may be
 * NULL; `u_out` holds the window length when given.
 *
 * # Safety
 * `stream` is a live handle; outputs are NULL or writable.
 */
enum TvwStatus tvw_stream_restore(struct TvwStream *stream,
                                  size_t q,
                                  double *u_out,
                                  double *lambda_out,
                                  double *sigma_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TVWIN_H */
