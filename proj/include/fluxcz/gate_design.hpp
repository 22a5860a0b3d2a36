#pragma once

#include <string>
#include <vector>

#include "fluxcz/device_model.hpp"
#include "fluxcz/propagator.hpp"
#include "fluxcz/pulse.hpp"

namespace fluxcz {

// Synchronized-Rabi solution. All frequencies in GHz, times in ns.
struct SyncSolution {
  double delta = 0.0;            // splitting used for the design
  double r = 1.0;                // omega_11_21 / omega_10_20
  double delta_detuning = 0.0;   // f_11_21 - f_d
  double omega = 0.0;            // common generalized Rabi frequency
  double omega_10_20 = 0.0;
  double omega_11_21 = 0.0;
  double t_gate_ideal = 0.0;     // 1 / omega
  double f_d = 0.0;
  double target_phase = 0.0;

  // |sqrt(omega_11^2 + d^2) - sqrt(omega_10^2 + (d - delta)^2)|
  double sync_residual() const;
};

SyncSolution sync_parameters(double delta, double r, double target_phase, double f_11_21);

// Closed-form optimal detuning ratio delta_detuning / delta for a pi phase.
double optimal_detuning_ratio(double r);

struct GeometricPhases {
  double theta_10 = 0.0;
  double theta_11 = 0.0;
  double delta_phi = 0.0;  // -(theta_11 - theta_10) / 2
};

GeometricPhases geometric_phases(const SyncSolution& solution, double delta);

// Rabi frequency ratio and per-transition drive matrix elements implied by the
// dressed charge operators. omega = eps_b * |element| in the rotating frame.
struct ChargeRabi {
  double element_10_20 = 0.0;  // |<20|(ratio n_A + n_B)|10>|
  double element_11_21 = 0.0;
  double r = 0.0;
};
ChargeRabi rabi_from_charge(const JointSystem& joint, double eps_ratio);

// Fitted oscillation of a sampled population p(t) = a - b cos(2 pi w t + phi).
struct RabiFit {
  double frequency = 0.0;  // w, GHz
  double offset = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
  double rms_residual = 0.0;
};
RabiFit fit_rabi_oscillation(const std::vector<double>& times, const std::vector<double>& pops);

// Resonance fit W^2 = omega_res^2 + (f - f0)^2 over a frequency scan.
struct ChevronFit {
  double f0 = 0.0;
  double omega_res = 0.0;
  double rms_residual = 0.0;  // in W^2 units
};
ChevronFit fit_chevron(const std::vector<double>& f_d, const std::vector<double>& w);

struct RabiMapRequest {
  double eps_b = 0.004;        // GHz, eps_a = eps_ratio * eps_b
  double eps_ratio = 0.9;
  std::vector<double> f_grid_10;  // drive frequencies around |10>-|20>
  std::vector<double> f_grid_11;  // around |11>-|21>
  double duration = 600.0;        // ns, square drive
  double sample_dt = 2.0;         // ns
  double tol = 1e-8;
};

struct RabiTrace {
  BareLabel initial;
  BareLabel excited;
  double f_d = 0.0;
  std::vector<double> times;
  std::vector<double> population;  // population of `excited`
  RabiFit fit;
};

struct RabiMap {
  std::vector<RabiTrace> traces;
  ChevronFit chevron_10;
  ChevronFit chevron_11;
  double r = 0.0;  // omega_res(11) / omega_res(10)
};

// Symmetric frequency grid of n points spanning +-half_span around center.
std::vector<double> centered_grid(double center, double half_span, int n);

// Default request centered on the device's two gate transitions.
RabiMapRequest default_rabi_request(const JointSystem& joint, double eps_ratio);

RabiMap rabi_map(const JointSystem& joint, const RabiMapRequest& request);

// Square pulse of constant amplitude starting at t = 0.
GateResult simulate_square_gate(const JointSystem& joint, double eps_a, double eps_b, double f_d,
                                double duration, double tol = 1e-10);

// Linear fit of resonant Rabi frequency versus eps_b at small amplitudes.
struct AmplitudeCalibration {
  double slope_10 = 0.0;  // GHz of Rabi frequency per GHz of eps_b
  double slope_11 = 0.0;
  double intercept_10 = 0.0;
  double intercept_11 = 0.0;
  std::vector<double> amplitudes;
  std::vector<double> omega_10;
  std::vector<double> omega_11;
};
AmplitudeCalibration calibrate_amplitude(const JointSystem& joint, double eps_ratio,
                                         const std::vector<double>& amplitudes,
                                         double duration = 600.0, double tol = 1e-8);

// Analytic design mapped to drive parameters via the charge elements.
struct GateDesign {
  SpectrumSummary spectrum;
  ChargeRabi charge;
  SyncSolution sync;
  double eps_a = 0.0;
  double eps_b = 0.0;
};
GateDesign design_gate(const JointSystem& joint, double eps_ratio, double target_phase,
                       double r_override = 0.0);

// Per-duration amplitude and frequency tuning of a flat-top pulse.
struct DurationScanRequest {
  std::vector<double> durations;  // total gate times, ns
  double t_width = 15.0;
  double eps_ratio = 0.9;
  double tol = 1e-9;
  int max_evals = 60;
};

struct DurationScanRow {
  double t_gate = 0.0;
  double t_plateau = 0.0;
  double eps_a = 0.0;
  double eps_b = 0.0;
  double f_d = 0.0;
  double fidelity_error = 1.0;
  double p_leak = 1.0;
  double delta_phi = 0.0;
  bool converged = false;
  std::string error;
};

// For each duration, minimizes leakage over (eps_b, f_d), warm-starting from
// the previous duration; reports the gate error at that point.
std::vector<DurationScanRow> gate_error_vs_duration(const JointSystem& joint,
                                                    const DurationScanRequest& request);

// Tunes (eps_b, f_d) for one flat-top timing, starting from the given values.
DurationScanRow tune_gate(const JointSystem& joint, double t_width, double t_plateau,
                          double eps_ratio, double eps_b0, double f_d0, double tol = 1e-9,
                          int max_evals = 60);

// Golden-section search for the duration of least gate error, bracketed by
// the neighbours of the best scanned row; each point is retuned.
DurationScanRow refine_optimal_duration(const JointSystem& joint, const DurationScanRequest& request,
                                        const std::vector<DurationScanRow>& rows,
                                        double resolution = 0.05);

struct LandscapeRow {
  double detuning = 0.0;  // f_11_21 - f_d, GHz
  double amplitude_scale = 0.0;
  double fidelity_error = 1.0;
  double p_leak = 1.0;
  double delta_phi = 0.0;
  bool ok = false;
};

// Gate error over a grid of drive detuning and amplitude scale for fixed
// pulse timing; amplitude scale multiplies (eps_a, eps_b).
std::vector<LandscapeRow> error_landscape(const JointSystem& joint, const PulseSpec& base,
                                          const std::vector<double>& detunings,
                                          const std::vector<double>& amplitude_scales,
                                          double tol = 1e-9);

}  // namespace fluxcz
