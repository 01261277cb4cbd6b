#ifndef QPT_H
#define QPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
enum QptStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  QPT_STATUS_OK = 0,
  QPT_STATUS_INVALID_ARGUMENT = 1,
  QPT_STATUS_NOT_HERMITIAN = 2,
  QPT_STATUS_VALIDATION = 3,
  QPT_STATUS_NOT_PHYSICAL = 4,
  // The probe set or β matrix is singular.
  QPT_STATUS_SINGULAR = 5,
  // The fit did not reach feasibility; the best iterate is still returned.
  QPT_STATUS_FIT_FAILED = 6,
  QPT_STATUS_FORMAT = 7,
  QPT_STATUS_IO = 8,
  QPT_STATUS_NULL_POINTER = 9,
  QPT_STATUS_PANIC = 10,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum QptStatus QptStatus;
#else
typedef int32_t QptStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

typedef enum QptFitMode {
  QPT_FIT_MODE_GENERAL = 0,
  QPT_FIT_MODE_TRACE_PRESERVING = 1,
} QptFitMode;

// Opaque experiment record.
typedef struct QptExperiment QptExperiment;

// Opaque process matrix.
typedef struct QptProcess QptProcess;

typedef struct QptConstraintReport {
  double trace_chi;
  double p_eig_plus;
  double p_eig_minus;
  double radical;
  double tp_residuals[3];
  double trace_identity_residual;
  double min_chi_eigenvalue;
  bool eq10_satisfied;
  bool tp_consistent;
} QptConstraintReport;

typedef struct QptFitDiagnostics {
  double objective;
  size_t iterations;
  double constraint_violation;
  bool converged;
  bool restarted;
} QptFitDiagnostics;

// Preparation and detection imperfections for a simulated experiment.
typedef struct QptNoise {
  bool shot_noise;
  // Radians, one per probe in H, V, D, R order.
  double preparation_rotation[4];
  // Fraction in [0, 1], one per probe.
  double preparation_depolarization[4];
} QptNoise;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failed call on this thread, or NULL
// if the most recent call succeeded. Valid until the next call into the
// library on this thread; do not free.
const char *qpt_last_error(void);

// Library version as a static NUL-terminated string.
const char *qpt_version(void);

// Builds a process matrix from 32 doubles. With `require_physical` the
// matrix must be Hermitian, positive semidefinite and satisfy the P bound.
//
// # Safety
// `chi` must point to 32 readable doubles and `out` to a writable handle slot.
QptStatus qpt_process_from_array(const double *chi, bool require_physical, struct QptProcess **out);

// Copies χ into 32 doubles.
//
// # Safety
// `process` must be a live handle and `chi_out` must point to 32 writable doubles.
QptStatus qpt_process_to_array(const struct QptProcess *process, double *chi_out);

// Whether the handle carries a validated physical χ.
//
// # Safety
// `process` must be a live handle or NULL (which yields false).
bool qpt_process_is_physical(const struct QptProcess *process);

// Analytic χ of a named channel, e.g. `"hadamard"`, `"polarizer-z"`,
// `"rotation-x:0.3"`, `"amplitude-damping:0.36"`, `"depolarizing:0.2"` or
// `"attenuator:0.7"`.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a writable handle slot.
QptStatus qpt_process_canonical(const char *name, struct QptProcess **out);

// Constraint diagnostics of χ at the given tolerance.
//
// # Safety
// `process` must be a live handle and `report` writable.
QptStatus qpt_process_report(const struct QptProcess *process,
                             double tolerance,
                             struct QptConstraintReport *report);

// Fits the nearest physical χ. On `QPT_STATUS_FIT_FAILED` the best iterate
// is still stored in `out` and `diagnostics`. `diagnostics` may be NULL.
//
// # Safety
// `raw` must be a live handle, `out` a writable handle slot and
// `diagnostics` NULL or writable.
QptStatus qpt_process_fit(const struct QptProcess *raw,
                          enum QptFitMode mode,
                          struct QptProcess **out,
                          struct QptFitDiagnostics *diagnostics);

// Operation elements of χ, ordered by decreasing weight. Writes up to four
// operators (8 doubles each) and their weights.
//
// # Safety
// `process` must be a live handle, `operators_out` must point to 32
// writable doubles, `weights_out` to 4 and `count_out` must be writable.
QptStatus qpt_process_kraus(const struct QptProcess *process,
                            double *operators_out,
                            double *weights_out,
                            size_t *count_out);

// Applies the channel to a density matrix (8 doubles in, 8 doubles out).
//
// # Safety
// `process` must be a live handle, `rho` must point to 8 readable doubles
// and `rho_out` to 8 writable ones.
QptStatus qpt_process_apply(const struct QptProcess *process, const double *rho, double *rho_out);

// Parses a χ file document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable handle slot.
QptStatus qpt_process_from_json(const char *json, struct QptProcess **out);

// Serializes χ as a χ file document. Free the result with [`qpt_string_free`].
//
// # Safety
// `process` must be a live handle and `out` writable.
QptStatus qpt_process_to_json(const struct QptProcess *process, char **out);

// # Safety
// `process` must be NULL or a handle not yet freed.
void qpt_process_free(struct QptProcess *process);

// Parses a noise specification such as `"shot,rotation=0.05"`.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` writable.
QptStatus qpt_noise_parse(const char *spec, struct QptNoise *out);

// Simulates the four-probe experiment on a physical channel. `noise` may
// be NULL for a noiseless run.
//
// # Safety
// `channel` must be a live handle, `noise` NULL or readable and `out` a
// writable handle slot.
QptStatus qpt_experiment_simulate(const struct QptProcess *channel,
                                  const struct QptNoise *noise,
                                  uint64_t n_in,
                                  uint64_t seed,
                                  struct QptExperiment **out);

// Parses an experiment document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable handle slot.
QptStatus qpt_experiment_from_json(const char *json, struct QptExperiment **out);

// Serializes an experiment. Free the result with [`qpt_string_free`].
//
// # Safety
// `experiment` must be a live handle and `out` writable.
QptStatus qpt_experiment_to_json(const struct QptExperiment *experiment, char **out);

// Linear inversion to a raw χ. `beta_condition_out` may be NULL.
//
// # Safety
// `experiment` must be a live handle, `out` a writable handle slot and
// `beta_condition_out` NULL or writable.
QptStatus qpt_experiment_reconstruct(const struct QptExperiment *experiment,
                                     bool assume_ideal_inputs,
                                     struct QptProcess **out,
                                     double *beta_condition_out);

// Reconstruction followed by a physical fit. `diagnostics` and `report`
// may be NULL.
//
// # Safety
// `experiment` must be a live handle, `out` a writable handle slot and the
// optional pointers NULL or writable.
QptStatus qpt_experiment_run_pipeline(const struct QptExperiment *experiment,
                                      bool assume_ideal_inputs,
                                      enum QptFitMode mode,
                                      struct QptProcess **out,
                                      struct QptFitDiagnostics *diagnostics,
                                      struct QptConstraintReport *report);

// # Safety
// `experiment` must be NULL or a handle not yet freed.
void qpt_experiment_free(struct QptExperiment *experiment);

// Releases a string returned by this library.
//
// # Safety
// `s` must be NULL or a string returned by this library and not yet freed.
void qpt_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QPT_H */
