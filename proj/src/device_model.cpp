#include "fluxcz/device_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fluxcz/errors.hpp"

namespace fluxcz {

namespace {

void require_finite_positive(double v, const char* name, bool allow_zero = false) {
  if (!std::isfinite(v) || v < 0.0 || (!allow_zero && v == 0.0)) {
    throw InvalidArgumentError(std::string("fluxonium parameter ") + name +
                               (allow_zero ? " must be >= 0" : " must be > 0"));
  }
}

// Fixes the sign of each real eigenvector so its largest-magnitude entry is
// positive; keeps operator phases reproducible across platforms.
void fix_gauge(MatrixXd& vecs) {
  for (Eigen::Index k = 0; k < vecs.cols(); ++k) {
    Eigen::Index arg = 0;
    vecs.col(k).cwiseAbs().maxCoeff(&arg);
    if (vecs(arg, k) < 0.0) vecs.col(k) *= -1.0;
  }
}

void check_symmetric(const MatrixXd& h, const char* what) {
  const double scale = std::max(h.cwiseAbs().maxCoeff(), 1.0);
  const double asym = (h - h.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw NumericalError(std::string(what) + " Hamiltonian is not Hermitian (asymmetry " +
                         std::to_string(asym) + ")");
  }
}

struct Diagonalized {
  VectorXd energies;
  MatrixXd vectors;
};

Diagonalized diagonalize(const MatrixXd& h, const std::string& context) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(h);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigensolver failed for " + context);
  }
  Diagonalized out{solver.eigenvalues(), solver.eigenvectors()};
  fix_gauge(out.vectors);
  return out;
}

}  // namespace

void FluxoniumParams::validate() const {
  require_finite_positive(e_c, "e_c");
  require_finite_positive(e_l, "e_l");
  require_finite_positive(e_j, "e_j", /*allow_zero=*/true);
  if (!std::isfinite(phi_ext)) throw InvalidArgumentError("fluxonium phi_ext must be finite");
}

std::string BareLabel::str() const {
  std::ostringstream os;
  os << '|' << a << b << '>';
  return os.str();
}

namespace detail {

OscillatorBasis oscillator_basis(double e_c, double e_l, int n_basis) {
  OscillatorBasis basis;
  // Zero-point amplitudes of 4 E_C n^2 + E_L phi^2 / 2 with [phi, n] = i.
  basis.phi_zpf = std::pow(2.0 * e_c / e_l, 0.25);
  basis.n_zpf = 0.5 / basis.phi_zpf;
  MatrixXd lower = MatrixXd::Zero(n_basis, n_basis);  // annihilation a
  for (int k = 1; k < n_basis; ++k) lower(k - 1, k) = std::sqrt(static_cast<double>(k));
  basis.phase = basis.phi_zpf * (lower + lower.transpose());
  basis.charge_over_i = basis.n_zpf * (lower.transpose() - lower);
  return basis;
}

MatrixXd fluxonium_hamiltonian(const FluxoniumParams& params, int n_basis) {
  const auto basis = oscillator_basis(params.e_c, params.e_l, n_basis);
  const double omega = std::sqrt(8.0 * params.e_c * params.e_l);

  MatrixXd h = MatrixXd::Zero(n_basis, n_basis);
  for (int k = 0; k < n_basis; ++k) h(k, k) = omega * (k + 0.5);

  if (params.e_j != 0.0) {
    // cos(phi - phi_ext) as a spectral function of the truncated phi matrix.
    const auto phi = diagonalize(basis.phase, "phase operator");
    const VectorXd c = (phi.energies.array() - params.phi_ext).cos().matrix();
    h -= params.e_j * (phi.vectors * c.asDiagonal() * phi.vectors.transpose());
  }
  return h;
}

}  // namespace detail

namespace {

SingleMode build_once(const FluxoniumParams& params, int n_basis, int n_keep) {
  const MatrixXd h = detail::fluxonium_hamiltonian(params, n_basis);
  check_symmetric(h, "fluxonium");
  const auto eig = diagonalize(h, "fluxonium with n_basis=" + std::to_string(n_basis));
  if (!eig.energies.allFinite()) {
    throw NumericalError("non-finite fluxonium spectrum with n_basis=" +
                         std::to_string(n_basis));
  }

  const MatrixXd u = eig.vectors.leftCols(n_keep);
  const auto basis = detail::oscillator_basis(params.e_c, params.e_l, n_basis);

  SingleMode mode;
  mode.params = params;
  mode.n_basis = n_basis;
  mode.energies = eig.energies.head(n_keep).array() - eig.energies(0);
  mode.phase_op = (u.transpose() * basis.phase * u).cast<cplx>();
  mode.charge_op = cplx(0.0, 1.0) * (u.transpose() * basis.charge_over_i * u).cast<cplx>();
  return mode;
}

}  // namespace

SingleMode build_fluxonium(const FluxoniumParams& params, const SingleModeOptions& options) {
  params.validate();
  if (options.n_basis < 20) {
    throw InvalidArgumentError("n_basis must be >= 20, got " + std::to_string(options.n_basis));
  }
  if (options.n_keep < 3 || options.n_keep > options.n_basis) {
    throw InvalidArgumentError("n_keep must lie in [3, n_basis]");
  }

  SingleMode mode = build_once(params, options.n_basis, options.n_keep);
  if (options.check_convergence) {
    const SingleMode refined = build_once(params, 2 * options.n_basis, options.n_keep);
    for (int k = 0; k < options.n_keep; ++k) {
      const double diff = std::abs(refined.energies(k) - mode.energies(k));
      const double scale = std::max(std::abs(mode.energies(k)), 1.0);
      if (diff > options.convergence_tol * scale) {
        std::ostringstream os;
        os << "fluxonium level " << k << " not converged at n_basis=" << options.n_basis
           << " (shift " << diff << " GHz on doubling)";
        throw ConvergenceError(os.str());
      }
    }
  }
  return mode;
}

int JointSystem::index_of(BareLabel label) const {
  if (auto k = find(label)) return *k;
  throw LabelingError("no dressed state carries label " + label.str());
}

std::optional<int> JointSystem::find(BareLabel label) const {
  for (std::size_t k = 0; k < label_map.size(); ++k) {
    if (label_map[k] && *label_map[k] == label) return static_cast<int>(k);
  }
  return std::nullopt;
}

std::array<int, 4> JointSystem::computational_indices() const {
  return {index_of({0, 0}), index_of({0, 1}), index_of({1, 0}), index_of({1, 1})};
}

JointSystem build_joint(const SingleMode& a, const SingleMode& b, double j_c, int m_trunc) {
  const int ka = a.size();
  const int kb = b.size();
  const int dim = ka * kb;
  if (!std::isfinite(j_c)) throw InvalidArgumentError("j_c must be finite");
  if (m_trunc < 9 || m_trunc > dim) {
    throw InvalidArgumentError("m_trunc must lie in [9, " + std::to_string(dim) + "], got " +
                               std::to_string(m_trunc));
  }

  // Product basis index i * kb + j for |i>_A |j>_B. n_A n_B = -(n_A/i)(n_B/i)
  // is real, so the joint problem stays real symmetric.
  const MatrixXd na_over_i = (a.charge_op / cplx(0.0, 1.0)).real();
  const MatrixXd nb_over_i = (b.charge_op / cplx(0.0, 1.0)).real();
  const MatrixXd eye_a = MatrixXd::Identity(ka, ka);
  const MatrixXd eye_b = MatrixXd::Identity(kb, kb);

  MatrixXd h = MatrixXd::Zero(dim, dim);
  MatrixXd na_full(dim, dim), nb_full(dim, dim);
  for (int i = 0; i < ka; ++i) {
    for (int j = 0; j < kb; ++j) {
      h(i * kb + j, i * kb + j) = a.energies(i) + b.energies(j);
    }
  }
  for (int i = 0; i < ka; ++i) {
    for (int ip = 0; ip < ka; ++ip) {
      na_full.block(i * kb, ip * kb, kb, kb) = na_over_i(i, ip) * eye_b;
      nb_full.block(i * kb, ip * kb, kb, kb) = eye_a(i, ip) * nb_over_i;
    }
  }
  h -= j_c * na_full * nb_full;
  check_symmetric(h, "joint");

  const auto eig = diagonalize(h, "joint system of dimension " + std::to_string(dim));
  const MatrixXd v = eig.vectors.leftCols(m_trunc);

  JointSystem joint;
  joint.mode_a = a;
  joint.mode_b = b;
  joint.j_c = j_c;
  joint.m_trunc = m_trunc;
  joint.energies = eig.energies.head(m_trunc).array() - eig.energies(0);
  joint.charge_a = cplx(0.0, 1.0) * (v.transpose() * na_full * v).cast<cplx>();
  joint.charge_b = cplx(0.0, 1.0) * (v.transpose() * nb_full * v).cast<cplx>();
  joint.label_map.assign(m_trunc, std::nullopt);
  joint.label_overlap.assign(m_trunc, 0.0);

  // Each bare state goes to the dressed state it overlaps most; ties resolve
  // to the lower dressed index because maxCoeff keeps the first maximum.
  for (int i = 0; i < ka; ++i) {
    for (int j = 0; j < kb; ++j) {
      const BareLabel label{i, j};
      Eigen::Index k = 0;
      const double overlap = v.row(i * kb + j).cwiseAbs2().maxCoeff(&k);
      const bool required =
          std::find(kRequiredLabels.begin(), kRequiredLabels.end(), label) != kRequiredLabels.end();
      if (overlap <= 0.5) {
        if (required) {
          std::ostringstream os;
          os << "ambiguous label for " << label.str() << ": max squared overlap " << overlap;
          throw LabelingError(os.str());
        }
        continue;
      }
      joint.label_map[k] = label;
      joint.label_overlap[k] = overlap;
    }
  }
  return joint;
}

JointSystem build_device(const DeviceParams& device, const DeviceNumerics& numerics) {
  const SingleMode a = build_fluxonium(device.qubit_a, numerics.single);
  const SingleMode b = build_fluxonium(device.qubit_b, numerics.single);
  return build_joint(a, b, device.j_c, numerics.m_trunc);
}

SpectrumSummary spectrum_summary(const JointSystem& joint) {
  for (const auto& label : kRequiredLabels) joint.index_of(label);

  SpectrumSummary s;
  const double e00 = joint.energy({0, 0});
  const double e01 = joint.energy({0, 1});
  const double e10 = joint.energy({1, 0});
  const double e11 = joint.energy({1, 1});
  s.f_a = e10 - e00;
  s.f_b = e01 - e00;
  s.f_10_20 = joint.energy({2, 0}) - e10;
  s.f_11_21 = joint.energy({2, 1}) - e11;
  const double split = s.f_11_21 - s.f_10_20;
  s.delta = std::abs(split);
  s.delta_sign = split >= 0.0 ? 1 : -1;
  s.xi_zz = e00 + e11 - e01 - e10;
  s.n01_a = joint.mode_a.charge_element(0, 1);
  s.n12_a = joint.mode_a.charge_element(1, 2);
  s.n01_b = joint.mode_b.charge_element(0, 1);
  s.n12_b = joint.mode_b.charge_element(1, 2);
  return s;
}

double gap_above_computational(const JointSystem& joint) {
  const double e11 = joint.energy({1, 1});
  double lowest = std::numeric_limits<double>::infinity();
  for (int k = 0; k < joint.dim(); ++k) {
    const auto& label = joint.label_map[k];
    if (!label || (label->a < 2 && label->b < 2)) continue;
    lowest = std::min(lowest, joint.energies(k));
  }
  return lowest - e11;
}

std::vector<FluxSweepRow> flux_sweep(const DeviceParams& device,
                                     const std::vector<double>& flux_grid, double flux_offset,
                                     const DeviceNumerics& numerics) {
  if (flux_grid.empty()) throw InvalidArgumentError("flux grid is empty");
  std::vector<FluxSweepRow> rows;
  rows.reserve(flux_grid.size());
  for (double flux : flux_grid) {
    FluxSweepRow row;
    row.flux = flux;
    DeviceParams point = device;
    point.qubit_a.phi_ext = flux;
    point.qubit_b.phi_ext = flux + flux_offset;
    try {
      row.summary = spectrum_summary(build_device(point, numerics));
      row.ok = true;
    } catch (const LabelingError& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace fluxcz
