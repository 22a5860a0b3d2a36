#pragma once

#include <functional>
#include <vector>

#include "fluxcz/device_model.hpp"
#include "fluxcz/dop853.hpp"
#include "fluxcz/pulse.hpp"
#include "fluxcz/types.hpp"

namespace fluxcz {

// Projected and phase-fixed gate on |00>, |01>, |10>, |11>.
struct GateResult {
  Matrix4c u_raw;   // projected block before the virtual-Z fix
  Matrix4c u_comp;  // after the fix
  double delta_phi = 0.0;  // wrapped to (-pi, pi]
  double fidelity = 0.0;
  double p_leak = 0.0;
};

// Real lab-frame drive signal s(t) multiplying the coupling operator.
using DriveSignal = std::function<double(double)>;

// Propagates the columns of psi0 (dressed basis) under
// H = diag(E) + s(t) * coupling from 0 to t_end. Returns Schroedinger-picture
// states. tol must lie in [1e-12, 1e-6].
MatrixXc propagate_states(const JointSystem& joint, const MatrixXc& coupling,
                          const DriveSignal& signal, double t_end, const MatrixXc& psi0,
                          double tol, ode::Stats* stats = nullptr);

// Same, returning the states at each of the non-decreasing sample times.
std::vector<MatrixXc> propagate_trajectory(const JointSystem& joint, const MatrixXc& coupling,
                                           const DriveSignal& signal,
                                           const std::vector<double>& times,
                                           const MatrixXc& psi0, double tol,
                                           ode::Stats* stats = nullptr);

// Full m_trunc x m_trunc evolution operator of a pulse.
MatrixXc propagate(const JointSystem& joint, const PulseSpec& spec, double tol = 1e-10);

// Images of the four computational states only (m_trunc x 4).
MatrixXc propagate_computational(const JointSystem& joint, const PulseSpec& spec,
                                 double tol = 1e-10);

// Accepts either the full operator or the m_trunc x 4 computational columns.
GateResult project_and_fix(const MatrixXc& u, const JointSystem& joint,
                           const Matrix4c& target = cz_target());

// Virtual-Z fix and metrics of an already projected 4x4 block.
GateResult fix_phases(const Matrix4c& u_raw, const Matrix4c& target = cz_target());

// Gauge-invariant conditional phase of a projected block, wrapped to (-pi, pi].
double conditional_phase(const Matrix4c& u_raw);

double avg_gate_fidelity(const Matrix4c& u_comp, const Matrix4c& u_target);
double leakage(const Matrix4c& u_comp);

// propagate_computational followed by project_and_fix.
GateResult simulate_gate(const JointSystem& joint, const PulseSpec& spec, double tol = 1e-10,
                         const Matrix4c& target = cz_target());

// Wraps an angle to (-pi, pi].
double wrap_phase(double x);

}  // namespace fluxcz
