#ifndef FLOQUET_AP_H
#define FLOQUET_AP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FapStatus {
  FAP_STATUS_OK = 0,
  FAP_STATUS_INVALID_ARGUMENT = 1,
  FAP_STATUS_PARSE_ERROR = 2,
  FAP_STATUS_PROPAGATION_ERROR = 3,
  FAP_STATUS_NEAR_SINGULAR = 4,
  FAP_STATUS_NEAR_RESONANT = 10,
  FAP_STATUS_RESONANT = 11,
  FAP_STATUS_PANIC = 99,
} FapStatus;

typedef struct FapModel FapModel;

typedef struct FapSolution FapSolution;

typedef struct FapSpectrum FapSpectrum;

// Resolution and tolerances. Start from [`fap_config_default`].
typedef struct FapConfig {
  uint32_t m;
  uint32_t substeps;
  double unit_band_tol;
  double resonance_tol;
  double guard;
  bool force;
} FapConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

struct FapConfig fap_config_default(void);

// Message for the last failed call on this thread. Valid until the next
// failing call; never null.
const char *fap_last_error(void);

// Parses a model document (UTF-8 JSON, NUL terminated).
//
// # Safety
// `json` must be a valid C string and `out` a valid pointer.
enum FapStatus fap_model_from_json(const char *json, struct FapModel **out);

// # Safety
// `model` must come from [`fap_model_from_json`] or be null.
void fap_model_free(struct FapModel *model);

// Assembles the monodromy operator at base time 1 and collects its
// eigenvalues and confirmed unit-circle angles. `cfg` may be null.
//
// # Safety
// Pointers must be valid; `out` receives a handle for [`fap_spectrum_free`].
enum FapStatus fap_spectrum(const struct FapModel *model,
                            const struct FapConfig *cfg,
                            struct FapSpectrum **out);

// # Safety
// `s` must be a valid spectrum handle.
size_t fap_spectrum_len(const struct FapSpectrum *s);

// Eigenvalues are ordered by decreasing modulus.
//
// # Safety
// `s` must be a valid spectrum handle; `re` and `im` valid pointers.
enum FapStatus fap_spectrum_eigenvalue(const struct FapSpectrum *s,
                                       size_t index,
                                       double *re,
                                       double *im);

// # Safety
// `s` must be a valid spectrum handle.
size_t fap_spectrum_unit_circle_len(const struct FapSpectrum *s);

// Angle in `[0, 2 pi)` of a confirmed unit-circle multiplier.
//
// # Safety
// `s` must be a valid spectrum handle; `angle` a valid pointer.
enum FapStatus fap_spectrum_unit_circle_angle(const struct FapSpectrum *s,
                                              size_t index,
                                              double *angle);

// # Safety
// `s` must come from [`fap_spectrum`] or be null.
void fap_spectrum_free(struct FapSpectrum *s);

// Writes 0 (non-resonant), 10 (near-resonant) or 11 (resonant) to
// `classification`.
//
// # Safety
// Pointers must be valid; `cfg` may be null.
enum FapStatus fap_check(const struct FapModel *model,
                         const struct FapConfig *cfg,
                         int32_t *classification);

// Constructs the almost periodic solution. Fails with `Resonant`, or with
// `NearResonant` unless `cfg->force` is set.
//
// # Safety
// Pointers must be valid; `cfg` may be null.
enum FapStatus fap_solve(const struct FapModel *model,
                         const struct FapConfig *cfg,
                         struct FapSolution **out);

// # Safety
// `sol` must be a valid solution handle.
size_t fap_solution_dim(const struct FapSolution *sol);

// Evaluates `u(t)` into `re[0..len]` and `im[0..len]`; `len` must equal
// the model dimension.
//
// # Safety
// `re` and `im` must point to `len` writable doubles.
enum FapStatus fap_solution_eval(const struct FapSolution *sol,
                                 double t,
                                 double *re,
                                 double *im,
                                 size_t len);

// Serializes the solution; release the string with [`fap_string_free`].
//
// # Safety
// Pointers must be valid.
enum FapStatus fap_solution_to_json(const struct FapSolution *sol, char **out);

// # Safety
// `s` must come from this library or be null.
void fap_string_free(char *s);

// # Safety
// `sol` must come from [`fap_solve`] or be null.
void fap_solution_free(struct FapSolution *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLOQUET_AP_H */
