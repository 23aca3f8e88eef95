#ifndef ABCS_H
#define ABCS_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AbcsStatus {
  ABCS_STATUS_OK = 0,
  ABCS_STATUS_NULL_POINTER = 1,
  ABCS_STATUS_INVALID_ARGUMENT = 2,
  ABCS_STATUS_INVALID_INSTANCE = 3,
  ABCS_STATUS_UNSUPPORTED = 4,
  ABCS_STATUS_BUFFER_TOO_SMALL = 5,
  ABCS_STATUS_WRONG_MODE = 6,
  ABCS_STATUS_PANIC = 7,
} AbcsStatus;

typedef enum AbcsMode {
  ABCS_MODE_ACTIVE = 0,
  ABCS_MODE_PROPORTIONAL = 1,
  ABCS_MODE_AGNOSTIC = 2,
  ABCS_MODE_OBLIVIOUS = 3,
} AbcsMode;

typedef enum AbcsPolicyKind {
  ABCS_POLICY_KIND_TRACK_AND_STOP = 0,
  ABCS_POLICY_KIND_BEST_CHALLENGER = 1,
  ABCS_POLICY_KIND_UNIFORM = 2,
} AbcsPolicyKind;

// Opaque bandit instance.
typedef struct AbcsInstance AbcsInstance;

// Opaque sequential policy.
typedef struct AbcsPolicy AbcsPolicy;

// Summary of an oracle solve. `tstar` is infinite when the instance is
// practically unidentifiable.
typedef struct AbcsOracleResult {
  double tstar;
  double lower_value;
  double upper_value;
  uint64_t iterations;
  bool converged;
} AbcsOracleResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next call into this library on the same thread.
const char *abcs_last_error(void);

// Parses an instance from its JSON description.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum AbcsStatus abcs_instance_from_json(const char *json, struct AbcsInstance **out);

// # Safety
// `inst` must come from [`abcs_instance_from_json`] and not be used again.
void abcs_instance_free(struct AbcsInstance *inst);

// Number of arms (control included) and of subpopulations.
//
// # Safety
// `inst` must be a live handle; the outputs may be null.
enum AbcsStatus abcs_instance_shape(const struct AbcsInstance *inst,
                                    uintptr_t *arms,
                                    uintptr_t *subpops);

// Treatment arms whose weighted mean beats the control, in increasing
// order.
//
// # Safety
// `inst` must be a live handle and `out` must hold `cap` values.
enum AbcsStatus abcs_instance_answer_set(const struct AbcsInstance *inst,
                                         uintptr_t *out,
                                         uintptr_t cap,
                                         uintptr_t *len);

// Characteristic time and oracle weights for one mode. `wstar` receives
// the arms-by-subpopulations weights in row-major order when non-null.
// A non-positive `tol` or zero `max_iters` selects the default.
//
// # Safety
// `inst` must be a live handle, `result` a valid pointer and `wstar`
// either null or able to hold `wstar_cap` values.
enum AbcsStatus abcs_oracle_solve(const struct AbcsInstance *inst,
                                  enum AbcsMode mode,
                                  double tol,
                                  uintptr_t max_iters,
                                  struct AbcsOracleResult *result,
                                  double *wstar,
                                  uintptr_t wstar_cap);

// Creates a policy for the shape, family and weights of `inst`. Only the
// metadata is used; the means stay hidden from the policy.
//
// # Safety
// `inst` must be a live handle and `out` a valid pointer.
enum AbcsStatus abcs_policy_new(const struct AbcsInstance *inst,
                                enum AbcsPolicyKind kind,
                                enum AbcsMode mode,
                                struct AbcsPolicy **out);

// # Safety
// `policy` must come from [`abcs_policy_new`] and not be used again.
void abcs_policy_free(struct AbcsPolicy *policy);

// Chooses the next arm. In proportional mode `revealed_subpop` is the
// subpopulation of the incoming unit; other modes ignore it. `subpop`
// receives the requested subpopulation in active mode and -1 otherwise.
//
// # Safety
// `policy` must be a live handle; the outputs may be null.
enum AbcsStatus abcs_policy_decide(struct AbcsPolicy *policy,
                                   int64_t revealed_subpop,
                                   uintptr_t *arm,
                                   int64_t *subpop);

// Records an outcome. Pass -1 as `subpop` when it was not observed
// (oblivious mode).
//
// # Safety
// `policy` must be a live handle.
enum AbcsStatus abcs_policy_observe(struct AbcsPolicy *policy,
                                    uintptr_t arm,
                                    int64_t subpop,
                                    double outcome);

// Current GLR statistic and risk level; the policy may stop once
// `delta_hat` is at most the target risk.
//
// # Safety
// `policy` must be a live handle; the outputs may be null.
enum AbcsStatus abcs_policy_risk(const struct AbcsPolicy *policy,
                                 double *lambda,
                                 double *delta_hat);

// Currently recommended set of arms.
//
// # Safety
// `policy` must be a live handle and `out` must hold `cap` values.
enum AbcsStatus abcs_policy_recommendation(const struct AbcsPolicy *policy,
                                           uintptr_t *out,
                                           uintptr_t cap,
                                           uintptr_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ABCS_H */
