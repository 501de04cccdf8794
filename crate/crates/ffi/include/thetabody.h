#ifndef THETABODY_H
#define THETABODY_H

#include <stddef.h>
#include <stdint.h>

/*
 Result codes.
 */
typedef enum TbStatus {
  TbStatus_Ok = 0,
  /*
   A required pointer was null.
   */
  TbStatus_NullPointer = 1,
  /*
   Argument out of range or inconsistent dimensions.
   */
  TbStatus_InvalidArgument = 2,
  /*
   Malformed text input.
   */
  TbStatus_Parse = 3,
  /*
   The solver stopped without an answer.
   */
  TbStatus_Solver = 4,
  TbStatus_Io = 5,
  /*
   A Rust panic was caught at the boundary.
   */
  TbStatus_Internal = 6,
} TbStatus;

/*
 Outcome of a sum of squares test.
 */
typedef enum TbVerdict {
  TbVerdict_Feasible = 0,
  TbVerdict_Infeasible = 1,
  TbVerdict_Undecided = 2,
} TbVerdict;

/*
 Linear measurements of one shape.
 */
typedef struct TbEnsemble TbEnsemble;

/*
 Outcome of a recovery.
 */
typedef struct TbRecovery TbRecovery;

/*
 Dense tensor.
 */
typedef struct TbTensor TbTensor;

/*
 Solver overrides; zero fields keep the defaults.
 */
typedef struct TbSolverOptions {
  uint64_t max_iterations;
  double eps;
} TbSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until the
 next failing call on the same thread.
 */
const char *tb_last_error(void);

/*
 Library version as a static string.
 */
const char *tb_version(void);

/*
 Tensor of shape `dims[0..ndims]` from `nvalues` row-major values.

 # Safety
 The arrays must hold the stated number of elements.
 */
enum TbStatus tb_tensor_new(const uintptr_t *dims,
                            uintptr_t ndims,
                            const double *values,
                            uintptr_t nvalues,
                            struct TbTensor **out);

/*
 Tensor from the JSON document `{"shape": [...], "values": [...]}`.

 # Safety
 `json` must be a nul-terminated string.
 */
enum TbStatus tb_tensor_from_json(const char *json, struct TbTensor **out);

/*
 Number of entries, or 0 for a null handle.

 # Safety
 `t` must be null or a live handle.
 */
uintptr_t tb_tensor_len(const struct TbTensor *t);

/*
 Copies the values into `buf`, which must hold `tb_tensor_len` entries.

 # Safety
 `t` must be a live handle and `buf` writable for `cap` doubles.
 */
enum TbStatus tb_tensor_values(const struct TbTensor *t, double *buf, uintptr_t cap);

/*
 # Safety
 `t` must be null or a handle not freed before.
 */
void tb_tensor_free(struct TbTensor *t);

/*
 Theta-norm of `t` for the exponent `p` (`"1"`, `"2"`, ..., `"inf"`) at
 order `k`. `opts` may be null.

 # Safety
 Pointers must be valid or, for `opts`, null.
 */
enum TbStatus tb_theta_norm(const struct TbTensor *t,
                            const char *p,
                            uint32_t k,
                            const struct TbSolverOptions *opts,
                            double *out);

/*
 `m` standard Gaussian measurements of `truth`.

 # Safety
 `truth` must be a live handle.
 */
enum TbStatus tb_ensemble_gaussian(const struct TbTensor *truth,
                                   uintptr_t m,
                                   uint64_t seed,
                                   struct TbEnsemble **out);

/*
 Ensemble from `{"shape": [...], "a": [[...], ...], "b": [...]}`.

 # Safety
 `json` must be a nul-terminated string.
 */
enum TbStatus tb_ensemble_from_json(const char *json, struct TbEnsemble **out);

/*
 # Safety
 `e` must be null or a live handle.
 */
uintptr_t tb_ensemble_len(const struct TbEnsemble *e);

/*
 # Safety
 `e` must be null or a handle not freed before.
 */
void tb_ensemble_free(struct TbEnsemble *e);

/*
 Minimizes the theta-norm subject to the measurements. `truth` and `opts`
 may be null.

 # Safety
 Pointers must be valid or null where allowed.
 */
enum TbStatus tb_recover(const struct TbEnsemble *e,
                         const char *p,
                         uint32_t k,
                         const struct TbTensor *truth,
                         const struct TbSolverOptions *opts,
                         struct TbRecovery **out);

/*
 Optimal theta-norm value, NaN for a null handle.

 # Safety
 `r` must be null or a live handle.
 */
double tb_recovery_norm(const struct TbRecovery *r);

/*
 Relative error to the ground truth, NaN when none was given.

 # Safety
 `r` must be null or a live handle.
 */
double tb_recovery_rel_error(const struct TbRecovery *r);

/*
 1 on success, 0 on failure, -1 without ground truth.

 # Safety
 `r` must be null or a live handle.
 */
int32_t tb_recovery_success(const struct TbRecovery *r);

/*
 Copy of the recovered tensor as a new handle.

 # Safety
 `r` must be a live handle.
 */
enum TbStatus tb_recovery_tensor(const struct TbRecovery *r, struct TbTensor **out);

/*
 # Safety
 `r` must be null or a handle not freed before.
 */
void tb_recovery_free(struct TbRecovery *r);

/*
 Tests whether `poly` (e.g. `"1 + x[1,1]"`) is a sum of squares of
 degree-`k` polynomials modulo the ideal of exponent `p`.

 # Safety
 Pointers must be valid or, for `opts`, null.
 */
enum TbStatus tb_certify(const uintptr_t *dims,
                         uintptr_t ndims,
                         const char *poly,
                         const char *p,
                         uint32_t k,
                         const struct TbSolverOptions *opts,
                         enum TbVerdict *out);

/*
 Gauge of the normal-cone section at the anchor rank-one tensor, for
 `g` indexed by the indices with at least two coordinates above 1.

 # Safety
 Arrays must hold the stated number of elements.
 */
enum TbStatus tb_gauge_ni(const uintptr_t *dims,
                          uintptr_t ndims,
                          const double *g,
                          uintptr_t ng,
                          const struct TbSolverOptions *opts,
                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THETABODY_H */
