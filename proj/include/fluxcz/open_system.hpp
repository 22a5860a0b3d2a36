#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fluxcz/types.hpp"

namespace fluxcz {

// T1 and Ramsey T2 of the two gate transitions, in microseconds.
struct CoherenceSet {
  double t1_10_20 = 8.9;
  double t2r_10_20 = 2.5;
  double t1_11_21 = 6.1;
  double t2r_11_21 = 1.7;

  void validate() const;
  // Rates in 1/us.
  double gamma1_10_20() const { return 1.0 / t1_10_20; }
  double gamma1_11_21() const { return 1.0 / t1_11_21; }
  double gamma_phi_10_20() const { return 1.0 / t2r_10_20 - 0.5 / t1_10_20; }
  double gamma_phi_11_21() const { return 1.0 / t2r_11_21 - 0.5 / t1_11_21; }
};

// Collapse rates of the six-level model in 1/ns.
struct SixLevelRates {
  double gamma1_10_20 = 0.0;
  double gamma_phi_10_20 = 0.0;
  double gamma1_11_21 = 0.0;
  double gamma_phi_11_21 = 0.0;

  static SixLevelRates from(const CoherenceSet& c, double scale = 1.0);
};

// First-order error of one driven full rotation for an initial state with
// weight c2 = |c|^2 on the driven level. Rates and time in matching units.
double analytic_state_error(double c2, double gamma1, double gamma_phi, double t_gate);

struct AnalyticGateError {
  double total = 0.0;  // sum over both transitions
  double contribution_10_20 = 0.0;
  double contribution_11_21 = 0.0;
  // Dephasing-dominated shortcut 0.15 t_gate (1/T2R(10-20) + 1/T2R(11-21)).
  double dephasing_approx = 0.0;
  std::string note;
};

// t_gate in ns.
AnalyticGateError analytic_gate_error(const CoherenceSet& coherence, double t_gate);

// Rotating-frame model on |00>, |01>, |10>, |11>, |20>, |21>. Frequencies in
// GHz; delta_detuning = f_11_21 - f_d.
struct SixLevelModel {
  double delta = 0.0;
  double delta_detuning = 0.0;
  double omega_10_20 = 0.0;
  double omega_11_21 = 0.0;

  MatrixXc hamiltonian(double drive_scale = 1.0) const;
};

struct LindbladOptions {
  double t_gate = 0.0;  // ns
  double tol = 1e-10;
  // Initial states as 6-vectors; empty selects the 16 product states.
  std::vector<VectorXc> initial_states;
  // Optional drive envelope in [0, 1]; empty means a square pulse.
  std::function<double(double)> envelope;
  // Optional 4x4 target on the computational block. When set, each state is
  // scored against target * psi instead of its noiseless evolution.
  std::optional<Matrix4c> target;
};

struct LindbladResult {
  double error = 0.0;  // mean of per_state
  std::vector<double> per_state;
  double max_trace_deviation = 0.0;
  double min_eigenvalue = 0.0;
};

// Average of 1 - <psi_ideal|rho|psi_ideal> where psi_ideal is the noiseless
// evolution of each initial state under the same model, or the target image.
LindbladResult lindblad_gate_error(const SixLevelModel& model, const SixLevelRates& rates,
                                   const LindbladOptions& options);

// The 16 states {|0>, |1>, |+>, |+i>} x {|0>, |1>, |+>, |+i>} embedded in six levels.
std::vector<VectorXc> product_states_16();

}  // namespace fluxcz
