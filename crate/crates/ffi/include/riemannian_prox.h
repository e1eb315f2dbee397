#ifndef RIEMANNIAN_PROX_H
#define RIEMANNIAN_PROX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RpCircumcenterClass {
  RP_CIRCUMCENTER_CLASS_CIRCUMCENTER = 0,
  RP_CIRCUMCENTER_CLASS_ALIGNED = 1,
  RP_CIRCUMCENTER_CLASS_NO_CIRCUMCENTER = 2,
} RpCircumcenterClass;

typedef enum RpManifoldKind {
  RP_MANIFOLD_KIND_EUCLIDEAN = 0,
  RP_MANIFOLD_KIND_SPHERE2 = 1,
  RP_MANIFOLD_KIND_CYLINDER = 2,
  RP_MANIFOLD_KIND_PARABOLOID = 3,
  RP_MANIFOLD_KIND_CIRCLE_LINE = 4,
  RP_MANIFOLD_KIND_TRUNCATED_L2 = 5,
} RpManifoldKind;

typedef enum RpStatus {
  RP_STATUS_OK = 0,
  RP_STATUS_NULL_POINTER = 1,
  RP_STATUS_INVALID_INPUT = 2,
  RP_STATUS_OUTSIDE_DOMAIN = 3,
  RP_STATUS_AMBIGUOUS_LOG = 4,
  RP_STATUS_SEARCH_FAILURE = 5,
  RP_STATUS_UNBOUNDED_BELOW = 6,
  RP_STATUS_REFUTED = 7,
  RP_STATUS_PRECONDITION_VIOLATED = 8,
  RP_STATUS_BUDGET_EXHAUSTED = 9,
  RP_STATUS_INCONCLUSIVE = 10,
  RP_STATUS_UNKNOWN_SCENARIO = 11,
  RP_STATUS_BUFFER_TOO_SMALL = 12,
  RP_STATUS_INTERNAL = 13,
} RpStatus;

/**
 * Opaque manifold handle.
 */
typedef struct RpManifold RpManifold;

/**
 * Opaque solver report handle.
 */
typedef struct RpReport RpReport;

/**
 * Opaque scenario run record handle.
 */
typedef struct RpRunRecord RpRunRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t rp_last_error(char *buf, uintptr_t len);

/**
 * Creates a manifold. `dim` is used by the Euclidean and truncated ℓ²
 * kinds and ignored otherwise.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RpStatus rp_manifold_new(enum RpManifoldKind kind, uintptr_t dim, struct RpManifold **out);

/**
 * # Safety
 * `m` must be null or a handle from `rp_manifold_new` not yet freed.
 */
void rp_manifold_free(struct RpManifold *m);

/**
 * # Safety
 * `m` must be a live handle.
 */
uintptr_t rp_manifold_ambient_dim(const struct RpManifold *m);

/**
 * Geodesic distance between two points.
 *
 * # Safety
 * `p` and `q` must hold `len` doubles; `out` must be valid.
 */
enum RpStatus rp_distance(const struct RpManifold *m,
                          const double *p,
                          const double *q,
                          uintptr_t len,
                          double *out);

/**
 * exp_p(v), written to `out` (length `len`).
 *
 * # Safety
 * `p`, `v` and `out` must hold `len` doubles.
 */
enum RpStatus rp_exp(const struct RpManifold *m,
                     const double *p,
                     const double *v,
                     uintptr_t len,
                     double *out);

/**
 * log_p(q) as an ambient tangent vector.
 *
 * # Safety
 * `p`, `q` and `out` must hold `len` doubles.
 */
enum RpStatus rp_log(const struct RpManifold *m,
                     const double *p,
                     const double *q,
                     uintptr_t len,
                     double *out);

/**
 * Moreau envelope of |x| on the real line: value and derivative at `x`.
 *
 * # Safety
 * `value` and `gradient` must be valid.
 */
enum RpStatus rp_envelope_abs(double alpha,
                              double x,
                              uint64_t seed,
                              double *value,
                              double *gradient);

/**
 * Finds or classifies a circumcenter of three points.
 *
 * # Safety
 * All coordinate arrays must hold `len` doubles; `out` must be valid.
 */
enum RpStatus rp_circumcenter(const struct RpManifold *m,
                              const double *a1,
                              const double *a2,
                              const double *a3,
                              const double *init,
                              uintptr_t len,
                              uint64_t seed,
                              struct RpReport **out);

/**
 * # Safety
 * `r` must be a live report handle; `out` must be valid.
 */
enum RpStatus rp_report_classification(const struct RpReport *r, enum RpCircumcenterClass *out);

/**
 * Witness coordinates; `BufferTooSmall` if `len` is short.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum RpStatus rp_report_witness(const struct RpReport *r, double *out, uintptr_t len);

/**
 * Residual of the solve and the certified lower bound (NaN when absent).
 *
 * # Safety
 * `residual` and `lower_bound` must be valid.
 */
enum RpStatus rp_report_values(const struct RpReport *r, double *residual, double *lower_bound);

/**
 * # Safety
 * `r` must be null or a live report handle.
 */
void rp_report_free(struct RpReport *r);

/**
 * Runs a registered scenario with the given seed.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be valid.
 */
enum RpStatus rp_run_scenario(const char *name, uint64_t seed, struct RpRunRecord **out);

/**
 * 1 if every expectation passed, 0 otherwise (also for a null handle).
 *
 * # Safety
 * `r` must be null or a live record handle.
 */
int32_t rp_run_record_passed(const struct RpRunRecord *r);

/**
 * The record as JSON. Free the string with `rp_string_free`.
 *
 * # Safety
 * `r` must be a live record handle; `out` must be valid.
 */
enum RpStatus rp_run_record_json(const struct RpRunRecord *r, char **out);

/**
 * # Safety
 * `r` must be null or a live record handle.
 */
void rp_run_record_free(struct RpRunRecord *r);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void rp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIEMANNIAN_PROX_H */
