#include "fluxcz/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fluxcz/errors.hpp"

namespace fluxcz {

double wrap_phase(double x) {
  double y = std::remainder(x, kTwoPi);
  if (y <= -kPi) y += kTwoPi;
  return y;
}

std::vector<MatrixXc> propagate_trajectory(const JointSystem& joint, const MatrixXc& coupling,
                                           const DriveSignal& signal,
                                           const std::vector<double>& times,
                                           const MatrixXc& psi0, double tol, ode::Stats* stats) {
  if (!(tol >= 1e-12 && tol <= 1e-6)) {
    throw InvalidArgumentError("integration tolerance must lie in [1e-12, 1e-6]");
  }
  const int m = joint.dim();
  if (coupling.rows() != m || coupling.cols() != m || psi0.rows() != m) {
    throw InvalidArgumentError("operator dimensions do not match the joint system");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0) || !std::isfinite(times[k]) || (k > 0 && times[k] < times[k - 1])) {
      throw InvalidArgumentError("sample times must be finite, >= 0 and non-decreasing");
    }
  }

  const VectorXd energies = joint.energies;
  // Interaction picture with respect to diag(E): only the drive term remains,
  // c' = -i 2pi s(t) u .* (D (conj(u) .* c)) with u_j = exp(i 2pi E_j t).
  MatrixXc state = psi0;
  VectorXc phase(m);
  MatrixXc scratch(m, psi0.cols());
  auto rhs = [&](double t, const MatrixXc& c, MatrixXc& dc) {
    const double s = signal(t);
    for (int j = 0; j < m; ++j) phase(j) = std::polar(1.0, kTwoPi * energies(j) * t);
    scratch.noalias() = phase.conjugate().asDiagonal() * c;
    dc.noalias() = coupling * scratch;
    dc = cplx(0.0, -kTwoPi * s) * (phase.asDiagonal() * dc);
  };

  ode::Options options;
  options.rtol = tol;
  options.atol = tol;
  ode::Stats total;
  std::vector<MatrixXc> out;
  out.reserve(times.size());
  double t = 0.0;
  for (double t_next : times) {
    if (t_next > t) {
      const ode::Stats s = ode::integrate(rhs, t, t_next, state, options);
      total.steps += s.steps;
      total.accepted += s.accepted;
      total.rejected += s.rejected;
      total.evaluations += s.evaluations;
      t = t_next;
    }
    MatrixXc lab = state;
    for (int j = 0; j < m; ++j) lab.row(j) *= std::polar(1.0, -kTwoPi * energies(j) * t);
    out.push_back(std::move(lab));
  }
  if (stats) *stats = total;
  return out;
}

MatrixXc propagate_states(const JointSystem& joint, const MatrixXc& coupling,
                          const DriveSignal& signal, double t_end, const MatrixXc& psi0,
                          double tol, ode::Stats* stats) {
  return propagate_trajectory(joint, coupling, signal, {t_end}, psi0, tol, stats).front();
}

namespace {

DriveSignal pulse_signal(const PulseSpec& spec) {
  return [spec](double t) {
    return envelope(std::clamp(t, 0.0, spec.t_gate()), spec) * std::cos(kTwoPi * spec.f_d * t);
  };
}

}  // namespace

MatrixXc propagate(const JointSystem& joint, const PulseSpec& spec, double tol) {
  spec.validate();
  const MatrixXc psi0 = MatrixXc::Identity(joint.dim(), joint.dim());
  return propagate_states(joint, drive_coupling(joint, spec.eps_a, spec.eps_b),
                          pulse_signal(spec), spec.t_gate(), psi0, tol);
}

MatrixXc propagate_computational(const JointSystem& joint, const PulseSpec& spec, double tol) {
  spec.validate();
  const auto idx = joint.computational_indices();
  MatrixXc psi0 = MatrixXc::Zero(joint.dim(), kNumComputational);
  for (int k = 0; k < kNumComputational; ++k) psi0(idx[k], k) = 1.0;
  return propagate_states(joint, drive_coupling(joint, spec.eps_a, spec.eps_b),
                          pulse_signal(spec), spec.t_gate(), psi0, tol);
}

double avg_gate_fidelity(const Matrix4c& u_comp, const Matrix4c& u_target) {
  const double norm = (u_comp.adjoint() * u_comp).trace().real();
  const double overlap = std::norm((u_target.adjoint() * u_comp).trace());
  return (norm + overlap) / 20.0;
}

double leakage(const Matrix4c& u_comp) {
  const double p = 1.0 - 0.25 * (u_comp.adjoint() * u_comp).trace().real();
  return std::max(p, -1e-9);
}

double conditional_phase(const Matrix4c& u_raw) {
  return wrap_phase(std::arg(u_raw(3, 3)) + std::arg(u_raw(0, 0)) - std::arg(u_raw(1, 1)) -
                    std::arg(u_raw(2, 2)));
}

GateResult fix_phases(const Matrix4c& u_raw, const Matrix4c& target) {
  static const char* names[4] = {"|00>", "|01>", "|10>", "|11>"};
  for (int k = 0; k < 4; ++k) {
    if (std::abs(u_raw(k, k)) < 1e-6) {
      std::ostringstream os;
      os << "diagonal element " << names[k] << " vanishes (|u| = " << std::abs(u_raw(k, k))
         << "); phase undefined";
      throw PhaseUndefinedError(os.str());
    }
  }
  const double p00 = std::arg(u_raw(0, 0));
  const double p01 = std::arg(u_raw(1, 1));
  const double p10 = std::arg(u_raw(2, 2));
  Eigen::Vector4cd z;
  z << std::polar(1.0, -p00), std::polar(1.0, -p01), std::polar(1.0, -p10),
      std::polar(1.0, -(p01 + p10 - p00));

  GateResult r;
  r.u_raw = u_raw;
  r.u_comp = z.asDiagonal() * u_raw;
  r.delta_phi = conditional_phase(u_raw);
  r.fidelity = avg_gate_fidelity(r.u_comp, target);
  r.p_leak = leakage(r.u_comp);
  return r;
}

GateResult project_and_fix(const MatrixXc& u, const JointSystem& joint, const Matrix4c& target) {
  const auto idx = joint.computational_indices();
  if (u.rows() != joint.dim() || (u.cols() != joint.dim() && u.cols() != kNumComputational)) {
    throw InvalidArgumentError("operator shape does not match the joint system");
  }
  const bool columns_only = u.cols() == kNumComputational && joint.dim() != kNumComputational;
  Matrix4c raw;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) raw(i, j) = u(idx[i], columns_only ? j : idx[j]);
  }
  return fix_phases(raw, target);
}

GateResult simulate_gate(const JointSystem& joint, const PulseSpec& spec, double tol,
                         const Matrix4c& target) {
  return project_and_fix(propagate_computational(joint, spec, tol), joint, target);
}

}  // namespace fluxcz
