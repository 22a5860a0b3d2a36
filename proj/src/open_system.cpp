#include "fluxcz/open_system.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fluxcz/dop853.hpp"
#include "fluxcz/errors.hpp"
#include "parallel.hpp"

namespace fluxcz {

namespace {

// Level indices in the six-level basis.
constexpr int k10 = 2, k11 = 3, k20 = 4, k21 = 5;
constexpr int kDim = 6;

void check_time(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string(name) + " must be a positive time");
  }
}

}  // namespace

void CoherenceSet::validate() const {
  check_time(t1_10_20, "t1_10_20");
  check_time(t2r_10_20, "t2r_10_20");
  check_time(t1_11_21, "t1_11_21");
  check_time(t2r_11_21, "t2r_11_21");
  if (t2r_10_20 > 2.0 * t1_10_20) {
    throw ValidationError("t2r_10_20 exceeds 2 * t1_10_20 (negative pure dephasing)");
  }
  if (t2r_11_21 > 2.0 * t1_11_21) {
    throw ValidationError("t2r_11_21 exceeds 2 * t1_11_21 (negative pure dephasing)");
  }
}

SixLevelRates SixLevelRates::from(const CoherenceSet& c, double scale) {
  c.validate();
  const double per_ns = 1e-3 * scale;
  return {c.gamma1_10_20() * per_ns, c.gamma_phi_10_20() * per_ns, c.gamma1_11_21() * per_ns,
          c.gamma_phi_11_21() * per_ns};
}

double analytic_state_error(double c2, double gamma1, double gamma_phi, double t_gate) {
  if (!(c2 >= 0.0 && c2 <= 1.0)) throw InvalidArgumentError("c2 must lie in [0, 1]");
  if (!(gamma1 >= 0.0) || !(gamma_phi >= 0.0) || !(t_gate >= 0.0)) {
    throw InvalidArgumentError("rates and gate time must be >= 0");
  }
  return (gamma1 + 2.0 * gamma_phi) * t_gate / 2.0 * c2 * (1.0 - c2) +
         (3.0 * gamma1 + 2.0 * gamma_phi) * t_gate / 8.0 * c2 * c2;
}

AnalyticGateError analytic_gate_error(const CoherenceSet& c, double t_gate) {
  c.validate();
  if (!(t_gate >= 0.0)) throw InvalidArgumentError("t_gate must be >= 0");
  const double t_us = t_gate * 1e-3;
  // Averages over the 16 product states: <|c|^2> = 1/4, <|c|^4> = 9/64.
  auto per_transition = [t_us](double g1, double gphi) {
    return (55.0 * g1 + 74.0 * gphi) * t_us / 512.0;
  };
  AnalyticGateError out;
  out.contribution_10_20 = per_transition(c.gamma1_10_20(), c.gamma_phi_10_20());
  out.contribution_11_21 = per_transition(c.gamma1_11_21(), c.gamma_phi_11_21());
  out.total = out.contribution_10_20 + out.contribution_11_21;
  out.dephasing_approx = 0.15 * t_us * (1.0 / c.t2r_10_20 + 1.0 / c.t2r_11_21);
  out.note = "first-order estimate for a square pulse of duration t_gate";
  return out;
}

MatrixXc SixLevelModel::hamiltonian(double drive_scale) const {
  MatrixXc h = MatrixXc::Zero(kDim, kDim);
  h(k20, k20) = delta_detuning - delta;
  h(k21, k21) = delta_detuning;
  h(k10, k20) = h(k20, k10) = 0.5 * drive_scale * omega_10_20;
  h(k11, k21) = h(k21, k11) = 0.5 * drive_scale * omega_11_21;
  return h;
}

std::vector<VectorXc> product_states_16() {
  const double s = 1.0 / std::sqrt(2.0);
  const std::array<Eigen::Vector2cd, 4> single = {
      Eigen::Vector2cd(1.0, 0.0), Eigen::Vector2cd(0.0, 1.0), Eigen::Vector2cd(s, s),
      Eigen::Vector2cd(s, cplx(0.0, s))};
  std::vector<VectorXc> out;
  for (const auto& a : single) {
    for (const auto& b : single) {
      VectorXc psi = VectorXc::Zero(kDim);
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) psi(2 * i + j) = a(i) * b(j);
      }
      out.push_back(psi);
    }
  }
  return out;
}

LindbladResult lindblad_gate_error(const SixLevelModel& model, const SixLevelRates& rates,
                                   const LindbladOptions& options) {
  if (!(options.t_gate > 0.0) || !std::isfinite(options.t_gate)) {
    throw InvalidArgumentError("t_gate must be > 0");
  }
  for (double g : {rates.gamma1_10_20, rates.gamma_phi_10_20, rates.gamma1_11_21,
                   rates.gamma_phi_11_21}) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidArgumentError("rates must be >= 0");
  }
  std::vector<VectorXc> states =
      options.initial_states.empty() ? product_states_16() : options.initial_states;
  for (const auto& psi : states) {
    if (psi.size() != kDim || std::abs(psi.norm() - 1.0) > 1e-9) {
      throw InvalidArgumentError("initial states must be normalized 6-vectors");
    }
  }

  // Collapse operators as (row, col, amplitude) of a single matrix element.
  struct Jump {
    int row, col;
    double amp;
  };
  std::vector<Jump> jumps;
  auto add = [&](int row, int col, double rate) {
    if (rate > 0.0) jumps.push_back({row, col, std::sqrt(rate)});
  };
  add(k10, k20, rates.gamma1_10_20);
  add(k20, k20, 2.0 * rates.gamma_phi_10_20);
  add(k11, k21, rates.gamma1_11_21);
  add(k21, k21, 2.0 * rates.gamma_phi_11_21);

  const MatrixXc h_full = model.hamiltonian();
  const MatrixXc h_static = model.hamiltonian(0.0);
  const MatrixXc h_drive = h_full - h_static;
  auto hamiltonian_at = [&](double t) -> MatrixXc {
    if (!options.envelope) return h_full;
    return h_static + options.envelope(t) * h_drive;
  };

  ode::Options ode_opt;
  ode_opt.rtol = options.tol;
  ode_opt.atol = options.tol;

  // Noiseless reference evolution of all states at once.
  MatrixXc psi0(kDim, static_cast<Eigen::Index>(states.size()));
  for (std::size_t k = 0; k < states.size(); ++k) psi0.col(k) = states[k];
  MatrixXc ideal = psi0;
  if (options.target) {
    MatrixXc embed = MatrixXc::Zero(kDim, kDim);
    embed.topLeftCorner(4, 4) = *options.target;
    ideal = embed * psi0;
  } else if (!options.envelope) {
    Eigen::SelfAdjointEigenSolver<MatrixXc> eig(h_full);
    const VectorXc ph = (eig.eigenvalues().cast<cplx>() * cplx(0.0, -kTwoPi * options.t_gate))
                            .array()
                            .exp()
                            .matrix();
    ideal = eig.eigenvectors() * ph.asDiagonal() * eig.eigenvectors().adjoint() * psi0;
  } else {
    auto rhs = [&](double t, const MatrixXc& y, MatrixXc& dy) {
      dy.noalias() = cplx(0.0, -kTwoPi) * (hamiltonian_at(t) * y);
    };
    ode::integrate(rhs, 0.0, options.t_gate, ideal, ode_opt);
  }

  LindbladResult result;
  result.per_state.assign(states.size(), 0.0);
  std::vector<double> trace_dev(states.size(), 0.0), min_eig(states.size(), 0.0);

  detail::parallel_for(states.size(), [&](std::size_t k) {
    MatrixXc rho = states[k] * states[k].adjoint();
    auto rhs = [&](double t, const MatrixXc& r, MatrixXc& dr) {
      const MatrixXc h = hamiltonian_at(t);
      dr.noalias() = cplx(0.0, -kTwoPi) * (h * r - r * h);
      for (const Jump& j : jumps) {
        const double g = j.amp * j.amp;
        // L rho L^dag for L = amp |row><col|.
        dr(j.row, j.row) += g * r(j.col, j.col);
        // -1/2 {L^dag L, rho} with L^dag L = amp^2 |col><col|.
        dr.row(j.col) -= 0.5 * g * r.row(j.col);
        dr.col(j.col) -= 0.5 * g * r.col(j.col);
      }
    };
    ode::integrate(rhs, 0.0, options.t_gate, rho, ode_opt);

    trace_dev[k] = std::abs(rho.trace() - 1.0);
    const MatrixXc herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<MatrixXc> eig(herm, Eigen::EigenvaluesOnly);
    min_eig[k] = eig.eigenvalues().minCoeff();
    const VectorXc target = ideal.col(k);
    result.per_state[k] = 1.0 - (target.adjoint() * rho * target)(0, 0).real();
  });

  double sum = 0.0;
  result.min_eigenvalue = min_eig.empty() ? 0.0 : min_eig[0];
  for (std::size_t k = 0; k < states.size(); ++k) {
    sum += result.per_state[k];
    result.max_trace_deviation = std::max(result.max_trace_deviation, trace_dev[k]);
    result.min_eigenvalue = std::min(result.min_eigenvalue, min_eig[k]);
  }
  if (result.max_trace_deviation > 1e-9) {
    std::ostringstream os;
    os << "density matrix trace drifted by " << result.max_trace_deviation;
    throw NumericalError(os.str());
  }
  if (result.min_eigenvalue < -1e-8) {
    std::ostringstream os;
    os << "density matrix lost positivity (min eigenvalue " << result.min_eigenvalue << ")";
    throw NumericalError(os.str());
  }
  result.error = sum / static_cast<double>(states.size());
  return result;
}

}  // namespace fluxcz
