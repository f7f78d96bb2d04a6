/* Generated by cbindgen; do not edit. */

#ifndef MNCC_H
#define MNCC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MnccMethod {
  MNCC_METHOD_ASYMPTOTIC = 0,
  MNCC_METHOD_NORMAL = 1,
  MNCC_METHOD_BOOTSTRAP = 2,
} MnccMethod;

/*
 Result codes.
 */
typedef enum MnccStatus {
  MNCC_STATUS_OK = 0,
  MNCC_STATUS_INVALID_ARGUMENT = 1,
  MNCC_STATUS_DOMAIN = 2,
  MNCC_STATUS_DEGENERATE_WEIGHTS = 3,
  MNCC_STATUS_SINGULAR_MOMENTS = 4,
  MNCC_STATUS_EMPTY_GRID = 5,
  MNCC_STATUS_CALIBRATION_FAILED = 6,
  MNCC_STATUS_NUMERICAL = 7,
  MNCC_STATUS_PARSE = 8,
  MNCC_STATUS_IO = 9,
  MNCC_STATUS_NULL_POINTER = 10,
  MNCC_STATUS_PANIC = 11,
} MnccStatus;

typedef enum MnccTransform {
  MNCC_TRANSFORM_NONE = 0,
  MNCC_TRANSFORM_NORMAL_CDF = 1,
  MNCC_TRANSFORM_RANK = 2,
} MnccTransform;

/*
 Opaque report handle.
 */
typedef struct MnccReport MnccReport;

/*
 Opaque sample handle.
 */
typedef struct MnccSample MnccSample;

/*
 Test options. `h` or `h0` ≤ 0 selects the default for the sample size.
 */
typedef struct MnccTestOptions {
  double h;
  double h0;
  size_t p;
  size_t q;
  double alpha;
  uint64_t seed;
  enum MnccMethod method;
  /*
   Monte-Carlo draws of the null law.
   */
  size_t mc;
  /*
   Bootstrap resamples.
   */
  size_t resamples;
} MnccTestOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or NULL. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *mncc_last_error_message(void);

/*
 Options with the library defaults.
 */
struct MnccTestOptions mncc_test_options_default(void);

/*
 Build a sample from row-major buffers of `n*dx`, `n*dy` and `n*dz` values.

 # Safety
 The buffers must hold the stated number of values and `out` must be a
 valid pointer.
 */
enum MnccStatus mncc_sample_new(size_t n,
                                size_t dx,
                                size_t dy,
                                size_t dz,
                                const double *x,
                                const double *y,
                                const double *z,
                                struct MnccSample **out);

/*
 Load a sample from a CSV file with header columns `x1.., y1.., z1..`.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MnccStatus mncc_sample_load_csv(const char *path,
                                     size_t dx,
                                     size_t dy,
                                     size_t dz,
                                     enum MnccTransform transform,
                                     struct MnccSample **out);

/*
 Number of rows, or 0 for NULL.

 # Safety
 `sample` must be NULL or a live handle.
 */
size_t mncc_sample_n(const struct MnccSample *sample);

/*
 # Safety
 `sample` must be NULL or a handle not yet freed.
 */
void mncc_sample_free(struct MnccSample *sample);

/*
 Run the test.

 # Safety
 `sample` must be a live handle, `options` NULL (defaults) or valid, and
 `out` a valid pointer.
 */
enum MnccStatus mncc_run_test(const struct MnccSample *sample,
                              const struct MnccTestOptions *options,
                              struct MnccReport **out);

/*
 # Safety
 `report` must be NULL or a handle not yet freed.
 */
void mncc_report_free(struct MnccReport *report);

/*
 Test statistic, NaN for NULL.

 # Safety
 `report` must be NULL or a live handle.
 */
double mncc_report_statistic(const struct MnccReport *report);

/*
 p-value, NaN for NULL.

 # Safety
 `report` must be NULL or a live handle.
 */
double mncc_report_p_value(const struct MnccReport *report);

/*
 Critical value, NaN when absent.

 # Safety
 `report` must be NULL or a live handle.
 */
double mncc_report_critical_value(const struct MnccReport *report);

/*
 1 if rejected, 0 if not, -1 for NULL.

 # Safety
 `report` must be NULL or a live handle.
 */
int mncc_report_reject(const struct MnccReport *report);

/*
 Number of evaluation points, 0 for NULL.

 # Safety
 `report` must be NULL or a live handle.
 */
size_t mncc_report_n_points(const struct MnccReport *report);

/*
 Density estimate and `ρ̂` at evaluation point `k`.

 # Safety
 `report` must be a live handle; the output pointers may be NULL.
 */
enum MnccStatus mncc_report_point(const struct MnccReport *report,
                                  size_t k,
                                  double *fz_hat,
                                  double *rho);

/*
 The full report as JSON; release with [`mncc_string_free`]. NULL on error.

 # Safety
 `report` must be NULL or a live handle.
 */
char *mncc_report_to_json(const struct MnccReport *report);

/*
 # Safety
 `s` must be NULL or a string returned by this library.
 */
void mncc_string_free(char *s);

/*
 Bandwidth for sample size `n`.

 # Safety
 `out` must be a valid pointer.
 */
enum MnccStatus mncc_select_bandwidth(size_t n, double *out);

/*
 Kernel constant `c_K(d) = (2√π)^d`.
 */
double mncc_c_k(size_t d);

/*
 Monte-Carlo `level`-quantile of the null law for `n_z` grid points.

 # Safety
 `out` must be a valid pointer.
 */
enum MnccStatus mncc_null_quantile(size_t n_z,
                                   size_t p,
                                   size_t q,
                                   double level,
                                   size_t mc,
                                   uint64_t seed,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MNCC_H */
