/* C interface to the fluxonium CZ gate simulator. */
#ifndef FLUXCZ_H
#define FLUXCZ_H

#include <stddef.h>
#include <stdint.h>

#if defined(FLUXCZ_BUILDING_LIBRARY)
#define FLUXCZ_API __attribute__((visibility("default")))
#else
#define FLUXCZ_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Stable; new codes are appended. */
typedef enum {
  FLUXCZ_OK = 0,
  FLUXCZ_E_INVALID_ARGUMENT = 1,
  FLUXCZ_E_DOMAIN = 2,
  FLUXCZ_E_NUMERICAL = 3,
  FLUXCZ_E_CONVERGENCE = 4,
  FLUXCZ_E_LABELING = 5,
  FLUXCZ_E_INTEGRATION = 6,
  FLUXCZ_E_PHASE_UNDEFINED = 7,
  FLUXCZ_E_INFEASIBLE = 8,
  FLUXCZ_E_FIT = 9,
  FLUXCZ_E_CALIBRATION = 10,
  FLUXCZ_E_PARSE = 11,
  FLUXCZ_E_VALIDATION = 12,
  FLUXCZ_E_IO = 13,
  FLUXCZ_E_UNKNOWN_COMMAND = 14,
  FLUXCZ_E_OPTIMIZER = 15,
  FLUXCZ_E_INTERNAL = 99
} fluxcz_status;

/* Opaque device: loaded config plus its diagonalized joint system. */
typedef struct fluxcz_device fluxcz_device;

typedef struct {
  double f_a, f_b, f_10_20, f_11_21;  /* GHz */
  double delta;                       /* |f_11_21 - f_10_20| */
  int delta_sign;
  double xi_zz;                       /* E00 + E11 - E01 - E10 */
  double gap_above_computational;
} fluxcz_spectrum;

typedef struct {
  double delta, r, target_phase;
  double delta_detuning, omega, omega_10_20, omega_11_21;
  double t_gate_ideal, f_d;
} fluxcz_sync;

typedef struct {
  double eps_a, eps_b, f_d;  /* GHz */
  double t_width, t_plateau; /* ns */
} fluxcz_pulse;

typedef struct {
  double fidelity, p_leak, delta_phi;
  double u_re[16], u_im[16]; /* phase-fixed block, row-major, order 00,01,10,11 */
} fluxcz_gate;

typedef struct {
  double p, a, b, c, dp, da, db, dc, rms_residual;
  int weighted, p_at_bound;
} fluxcz_rb_fit;

typedef struct {
  double a_a, b_a, a_b, b_b, swap_b, swap_c;
} fluxcz_readout_cal;

FLUXCZ_API const char* fluxcz_version(void);
FLUXCZ_API const char* fluxcz_status_name(int status);
/* Message of the last failure on the calling thread; empty after success. */
FLUXCZ_API const char* fluxcz_last_error(void);

FLUXCZ_API int fluxcz_device_load(const char* path, fluxcz_device** out);
FLUXCZ_API int fluxcz_device_from_json(const char* text, fluxcz_device** out);
FLUXCZ_API void fluxcz_device_free(fluxcz_device* device);
FLUXCZ_API int fluxcz_device_hash(const fluxcz_device* device, uint64_t* out);
FLUXCZ_API int fluxcz_device_spectrum(const fluxcz_device* device, fluxcz_spectrum* out);
FLUXCZ_API int fluxcz_device_simulate(const fluxcz_device* device, const fluxcz_pulse* pulse,
                                      double tol, fluxcz_gate* out);

FLUXCZ_API int fluxcz_sync_parameters(double delta, double r, double target_phase,
                                      double f_11_21, fluxcz_sync* out);

FLUXCZ_API int fluxcz_rb_fit_curve(const double* m, const double* survival, const double* std,
                                   size_t n, fluxcz_rb_fit* out);
/* p_raw and p_out ordered p00, p10, p01, p11 with qubit A first. */
FLUXCZ_API int fluxcz_readout_correct(const double* p_raw, const fluxcz_readout_cal* cal,
                                      double* p_out, int* clamped);

/* Command catalog for front ends. */
FLUXCZ_API size_t fluxcz_command_count(void);
FLUXCZ_API const char* fluxcz_command_name(size_t index);
FLUXCZ_API const char* fluxcz_command_help(size_t index);
FLUXCZ_API int fluxcz_command_needs_config(size_t index);
FLUXCZ_API size_t fluxcz_command_flag_count(size_t index);
FLUXCZ_API int fluxcz_command_flag(size_t index, size_t flag, const char** name,
                                   const char** default_value, const char** help);

/* Runs a command; flags are parallel key/value arrays without leading dashes.
   config_path may be NULL. The one-line summary is available from
   fluxcz_last_summary until the next call on this thread. */
FLUXCZ_API int fluxcz_run_command(const char* name, const char* config_path,
                                  const char* const* keys, const char* const* values,
                                  size_t n_flags, const char* out_dir);
FLUXCZ_API const char* fluxcz_last_summary(void);

#ifdef __cplusplus
}
#endif

#endif
