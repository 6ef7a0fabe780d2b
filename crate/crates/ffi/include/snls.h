#ifndef SNLS_H
#define SNLS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Bits of `SnlsVerdict::caveats`.
#define SNLS_CAVEAT_NON_RADIAL_GAMMA_FAR 1

#define SNLS_CAVEAT_NO_SYMMETRY_BLOW_UP_OPEN 2

#define SNLS_CAVEAT_ENERGY_ABOVE_THRESHOLD 4

typedef enum SnlsStatus {
  SNLS_STATUS_OK = 0,
  SNLS_STATUS_NULL_POINTER = 1,
  SNLS_STATUS_VALIDATION = 2,
  SNLS_STATUS_NUMERICAL_FAULT = 3,
  SNLS_STATUS_CONVERGENCE = 4,
  SNLS_STATUS_IO = 5,
  SNLS_STATUS_UNSUPPORTED = 6,
  SNLS_STATUS_BUFFER_TOO_SMALL = 7,
  SNLS_STATUS_PANIC = 8,
  SNLS_STATUS_OTHER = 9,
} SnlsStatus;

typedef enum SnlsTermination {
  SNLS_TERMINATION_HORIZON_REACHED = 0,
  SNLS_TERMINATION_BLOW_UP_DETECTED = 1,
  SNLS_TERMINATION_DT_FLOOR = 2,
  SNLS_TERMINATION_NUMERICAL_FAULT = 3,
} SnlsTermination;

typedef enum SnlsSymmetry {
  SNLS_SYMMETRY_RADIAL = 0,
  SNLS_SYMMETRY_CYLINDRICAL = 1,
  SNLS_SYMMETRY_NONE = 2,
} SnlsSymmetry;

typedef enum SnlsVerdictKind {
  SNLS_VERDICT_KIND_GLOBAL_SCATTERING = 0,
  SNLS_VERDICT_KIND_BLOW_UP = 1,
  SNLS_VERDICT_KIND_INDETERMINATE = 2,
} SnlsVerdictKind;

typedef enum SnlsBasis {
  SNLS_BASIS_ENERGY_NEGATIVE = 0,
  SNLS_BASIS_BELOW_THRESHOLD = 1,
  SNLS_BASIS_ABOVE_THRESHOLD = 2,
  SNLS_BASIS_BOUNDARY = 3,
} SnlsBasis;

// Opaque grid handle.
typedef struct SnlsGrid SnlsGrid;

// Opaque ground-state handle.
typedef struct SnlsGroundState SnlsGroundState;

// Opaque field pair handle.
typedef struct SnlsState SnlsState;

// Opaque trajectory handle.
typedef struct SnlsTrajectory SnlsTrajectory;

typedef struct SnlsFunctionals {
  double time;
  double mass_mu;
  double mass_3gamma;
  double kinetic;
  double potential;
  double energy_mu;
  double pohozaev;
  double action_omega;
} SnlsFunctionals;

typedef struct SnlsGroundStateConstants {
  double gamma;
  double k_gs;
  double m_gs;
  double e_gs;
  double p_gs;
  double c_opt;
  double residual_1;
  double residual_2;
  size_t iterations;
  // 1 when the profile lies on the `(0, g)` branch.
  int32_t semi_trivial;
} SnlsGroundStateConstants;

typedef struct SnlsEvolveOptions {
  double dt;
  double t_end;
  size_t output_stride;
  double blowup_trigger;
  bool adapt;
  double growth_trigger;
  double dt_floor;
} SnlsEvolveOptions;

typedef struct SnlsVerdict {
  enum SnlsVerdictKind kind;
  enum SnlsBasis basis;
  // Bitwise OR of `SNLS_CAVEAT_*`.
  uint32_t caveats;
  double energy_mu;
  double energy_product;
  double energy_threshold;
  double kinetic_product;
  double kinetic_threshold;
} SnlsVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *snls_version(void);

// Copies the last error message of this thread into `buf` (truncated,
// always NUL-terminated when `len > 0`) and returns the full length
// including the terminator.
size_t snls_last_error(char *buf, size_t len);

enum SnlsStatus snls_grid_radial(size_t points, double extent, struct SnlsGrid **out);

enum SnlsStatus snls_grid_cartesian(size_t points, double extent, struct SnlsGrid **out);

enum SnlsStatus snls_grid_cylindrical(size_t rho_points,
                                      size_t z_points,
                                      double rho_extent,
                                      double z_extent,
                                      struct SnlsGrid **out);

// Number of samples per component; 0 for a null handle.
size_t snls_grid_len(const struct SnlsGrid *grid);

void snls_grid_free(struct SnlsGrid *grid);

// Builds a pair from sample arrays of length `len` (the grid length).
// Imaginary parts may be null.
enum SnlsStatus snls_state_new(const struct SnlsGrid *grid,
                               double gamma,
                               double mu,
                               const double *u_re,
                               const double *u_im,
                               const double *v_re,
                               const double *v_im,
                               size_t len,
                               struct SnlsState **out);

// Copies the samples out; any of the four buffers may be null.
enum SnlsStatus snls_state_copy(const struct SnlsState *state,
                                double *u_re,
                                double *u_im,
                                double *v_re,
                                double *v_im,
                                size_t len);

// Time stamp of the pair; NaN for a null handle.
double snls_state_time(const struct SnlsState *state);

enum SnlsStatus snls_state_functionals(const struct SnlsState *state,
                                       double omega,
                                       struct SnlsFunctionals *out);

// Writes the pair as a CRF1 snapshot.
enum SnlsStatus snls_state_write(const struct SnlsState *state, const char *path);

enum SnlsStatus snls_state_read(const char *path, double gamma, double mu, struct SnlsState **out);

void snls_state_free(struct SnlsState *state);

// Solves for the ground state at `gamma` on a radial grid from the default
// seed. `tol <= 0` and `max_iter == 0` select the defaults. Returns
// `SNLS_STATUS_CONVERGENCE` if the iteration stalls.
enum SnlsStatus snls_ground_state_solve(double gamma,
                                        const struct SnlsGrid *grid,
                                        double tol,
                                        size_t max_iter,
                                        struct SnlsGroundState **out);

enum SnlsStatus snls_ground_state_constants(const struct SnlsGroundState *gs,
                                            struct SnlsGroundStateConstants *out);

// The profile `(φ, ψ)` as a new pair with `μ = 3γ`.
enum SnlsStatus snls_ground_state_profile(const struct SnlsGroundState *gs, struct SnlsState **out);

void snls_ground_state_free(struct SnlsGroundState *gs);

struct SnlsEvolveOptions snls_evolve_options_default(void);

// Evolves `state`. A trajectory is produced for every termination; a
// numerical fault additionally returns `SNLS_STATUS_NUMERICAL_FAULT` with
// `*out` still set.
enum SnlsStatus snls_evolve(const struct SnlsState *state,
                            const struct SnlsEvolveOptions *options,
                            struct SnlsTrajectory **out);

enum SnlsStatus snls_trajectory_termination(const struct SnlsTrajectory *t,
                                            enum SnlsTermination *out);

// Number of reports; 0 for a null handle.
size_t snls_trajectory_len(const struct SnlsTrajectory *t);

// Copies the named series (`time`, a functional or a monitor) into `out`.
enum SnlsStatus snls_trajectory_series(const struct SnlsTrajectory *t,
                                       const char *name,
                                       double *out,
                                       size_t len);

enum SnlsStatus snls_trajectory_final_state(const struct SnlsTrajectory *t, struct SnlsState **out);

void snls_trajectory_free(struct SnlsTrajectory *t);

// Threshold classification with the default band and energy convention.
enum SnlsStatus snls_classify(const struct SnlsState *state,
                              const struct SnlsGroundStateConstants *constants,
                              enum SnlsSymmetry symmetry,
                              struct SnlsVerdict *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SNLS_H */
