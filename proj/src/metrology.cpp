#include "fluxcz/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "fluxcz/errors.hpp"
#include "least_squares.hpp"

namespace fluxcz {

namespace {

void check_dimension(int d) {
  if (d != 2 && d != 4) throw InvalidArgumentError("dimension must be 2 or 4");
}

// Square roots of the diagonal of the pseudo-inverse of J^T J.
Eigen::VectorXd parameter_errors(const Eigen::MatrixXd& jac, double scale) {
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jtj);
  const Eigen::VectorXd ev = eig.eigenvalues();
  // At c = 0 the c column is a combination of the p and b columns, so J^T J
  // is singular to first order while the cost still rises at fourth order.
  // Dropping that direction matches the observed scatter of p.
  const double cutoff = std::max(ev.cwiseAbs().maxCoeff(), 1e-300) * 1e-12;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (ev(k) > cutoff) inv(k) = 1.0 / ev(k);
  }
  const Eigen::MatrixXd cov = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return (cov.diagonal() * scale).cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

void RbCurve::validate() const {
  const std::size_t n = m_values.size();
  if (survival.size() != n || std.size() != n) {
    throw ValidationError("RB curve arrays have different lengths");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(m_values[k]) || m_values[k] < 0.0) {
      throw ValidationError("RB m values must be finite and >= 0");
    }
    if (!(survival[k] >= 0.0 && survival[k] <= 1.0)) {
      throw ValidationError("RB survival must lie in [0, 1]");
    }
    if (!(std[k] >= 0.0) || !std::isfinite(std[k])) {
      throw ValidationError("RB std must be finite and >= 0");
    }
  }
  if (n_interleaved < 0) throw ValidationError("n_interleaved must be >= 0");
}

double rb_model(double m, double p, double a, double b, double c) {
  return a + b * std::pow(p, m) + c * (m - 1.0) * std::pow(p, m - 2.0);
}

RbFit fit_rb(const RbCurve& curve) {
  curve.validate();
  std::vector<double> distinct = curve.m_values;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 4) throw FitError("RB fit needs at least 4 distinct m values");

  const std::size_t n = curve.m_values.size();
  const bool weighted =
      std::all_of(curve.std.begin(), curve.std.end(), [](double s) { return s > 0.0; });

  // Deterministic start: a from the tail, b from the first point, c = 0 and
  // p from a two-point log ratio.
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return curve.m_values[i] < curve.m_values[j]; });
  const std::size_t tail = std::max<std::size_t>(1, n / 4);
  double a0 = 0.0;
  for (std::size_t k = n - tail; k < n; ++k) a0 += curve.survival[order[k]];
  a0 /= static_cast<double>(tail);
  const std::size_t i0 = order.front();
  const std::size_t i1 = order[n / 2];
  const double b0 = curve.survival[i0] - a0;
  double p0 = 1.0;
  const double num = curve.survival[i1] - a0;
  const double dm = curve.m_values[i1] - curve.m_values[i0];
  if (b0 != 0.0 && num / b0 > 0.0 && dm > 0.0) {
    p0 = std::clamp(std::pow(num / b0, 1.0 / dm), 0.05, 1.0);
  }

  auto residual_with = [&](double p, double a, double b, double c, Eigen::VectorXd& r) {
    // Large finite residual outside p > 0 so the step is rejected, not aborted.
    if (!(p > 0.0)) {
      r.setConstant(1e6);
      return;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double w = weighted ? 1.0 / curve.std[k] : 1.0;
      r(k) = (rb_model(curve.m_values[k], p, a, b, c) - curve.survival[k]) * w;
    }
  };
  auto residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    residual_with(x(0), x(1), x(2), x(3), r);
  };

  // The model has separate minima along c; try a few starting values of c
  // and keep the lowest converged cost.
  Eigen::VectorXd steps = Eigen::VectorXd::Constant(4, 1e-7);
  const double c_scale = std::abs(b0) * std::max(1.0 - p0, 1e-3);
  detail::LsqResult fit;
  bool have = false;
  for (double c0 : {0.0, 0.25, -0.25, 1.0, -1.0}) {
    Eigen::VectorXd x(4);
    x << p0, a0, b0, c0 * c_scale;
    auto trial = detail::least_squares(residual, x, static_cast<int>(n), steps, 4000, 1e-14);
    const int used = have ? fit.evaluations : 0;
    trial.evaluations += used;
    if (!have || (trial.converged && (!fit.converged || trial.cost < fit.cost))) {
      fit = std::move(trial);
      have = true;
    } else {
      fit.evaluations = trial.evaluations;
    }
  }
  if (!fit.converged || !fit.residual.allFinite() || !(fit.x(0) > 0.0)) {
    std::ostringstream os;
    os << "RB fit failed (" << fit.message << ", p = " << fit.x(0) << ", residual " << fit.cost
       << ")";
    throw FitError(os.str());
  }

  RbFit out;
  out.weighted = weighted;
  if (fit.x(0) >= 1.0) {
    // Refit on the boundary p = 1.
    out.p_at_bound = true;
    auto bound = [&](const Eigen::VectorXd& y, Eigen::VectorXd& r) {
      residual_with(1.0, y(0), y(1), y(2), r);
    };
    Eigen::VectorXd y(3);
    y << fit.x(1), fit.x(2), fit.x(3);
    const auto fb = detail::least_squares(bound, y, static_cast<int>(n),
                                          Eigen::VectorXd::Constant(3, 1e-7), 4000, 1e-14);
    if (!fb.converged) throw FitError("RB fit at p = 1 did not converge (" + fb.message + ")");
    Eigen::VectorXd full(4);
    full << 1.0, fb.x(0), fb.x(1), fb.x(2);
    fit.x = full;
    fit.residual = fb.residual;
    fit.cost = fb.cost;
    fit.evaluations += fb.evaluations;
    Eigen::VectorXd r0(n), r1(n);
    residual(full, r0);
    for (int j = 0; j < 4; ++j) {
      Eigen::VectorXd xp = full;
      const double h = j == 0 ? -1e-7 : 1e-7;  // stay inside p <= 1
      xp(j) += h;
      residual(xp, r1);
      fit.jacobian.col(j) = (r1 - r0) / h;
    }
  }

  out.p = fit.x(0);
  out.a = fit.x(1);
  out.b = fit.x(2);
  out.c = fit.x(3);
  out.evaluations = fit.evaluations;
  const double dof = std::max<double>(1.0, static_cast<double>(n) - 4.0);
  const double scale = weighted ? 1.0 : fit.cost / dof;
  const Eigen::VectorXd err = parameter_errors(fit.jacobian, scale);
  out.dp = err(0);
  out.da = err(1);
  out.db = err(2);
  out.dc = err(3);
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = rb_model(curve.m_values[k], out.p, out.a, out.b, out.c) - curve.survival[k];
    ss += d * d;
  }
  out.rms_residual = std::sqrt(ss / static_cast<double>(n));
  return out;
}

RbJointFit fit_rb_joint(const std::vector<RbCurve>& curves) {
  const std::size_t k = curves.size();
  if (k == 0) throw FitError("joint RB fit needs at least one curve");
  std::size_t n_res = 0;
  bool weighted = true;
  for (const auto& c : curves) {
    c.validate();
    n_res += c.m_values.size();
    for (double s : c.std) weighted = weighted && s > 0.0;
  }
  if (n_res < k + 3 + 1) throw FitError("joint RB fit needs more points than parameters");

  // Start from independent fits; shared SPAM terms from the first curve.
  Eigen::VectorXd x(static_cast<Eigen::Index>(k + 3));
  const RbFit first = fit_rb(curves.front());
  x(0) = first.a;
  x(1) = first.b;
  x(2) = 0.0;
  for (std::size_t i = 0; i < k; ++i) x(3 + i) = i == 0 ? first.p : fit_rb(curves[i]).p;

  auto residual = [&](const Eigen::VectorXd& v, Eigen::VectorXd& r) {
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double p = v(3 + i);
      const auto& cv = curves[i];
      for (std::size_t j = 0; j < cv.m_values.size(); ++j) {
        const double w = weighted ? 1.0 / cv.std[j] : 1.0;
        r(row++) = p > 0.0 ? (rb_model(cv.m_values[j], p, v(0), v(1), v(2)) - cv.survival[j]) * w
                           : 1e6;
      }
    }
  };
  const Eigen::VectorXd steps = Eigen::VectorXd::Constant(x.size(), 1e-7);
  const auto fit = detail::least_squares(residual, x, static_cast<int>(n_res), steps, 20000, 1e-14);
  if (!fit.converged) throw FitError("joint RB fit failed (" + fit.message + ")");

  RbJointFit out;
  out.weighted = weighted;
  out.evaluations = fit.evaluations;
  out.a = fit.x(0);
  out.b = fit.x(1);
  out.c = fit.x(2);
  const double dof = std::max<double>(1.0, static_cast<double>(n_res) - static_cast<double>(x.size()));
  const Eigen::VectorXd err = parameter_errors(fit.jacobian, weighted ? 1.0 : fit.cost / dof);
  out.da = err(0);
  out.db = err(1);
  out.dc = err(2);
  for (std::size_t i = 0; i < k; ++i) {
    out.p.push_back(fit.x(3 + i));
    out.dp.push_back(err(3 + i));
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < curves[i].m_values.size(); ++j) {
      const double d = rb_model(curves[i].m_values[j], out.p[i], out.a, out.b, out.c) -
                       curves[i].survival[j];
      ss += d * d;
    }
  }
  out.rms_residual = std::sqrt(ss / static_cast<double>(n_res));
  return out;
}

double clifford_fidelity(double p, int d) {
  check_dimension(d);
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgumentError("p must lie in [0, 1]");
  return 1.0 - (d - 1.0) / d * (1.0 - p);
}

double depolarizing_from_fidelity(double fidelity, int d) {
  check_dimension(d);
  return 1.0 - (1.0 - fidelity) * d / (d - 1.0);
}

InterleavedError interleaved_error(double p_gate, double p_ref, int d) {
  check_dimension(d);
  if (!(p_ref > 0.0)) throw InvalidArgumentError("p_ref must be > 0");
  InterleavedError out;
  out.error = (d - 1.0) / d * (1.0 - p_gate / p_ref);
  out.warning = p_gate > p_ref;
  return out;
}

double rb_error_bar(double p_n, double dp_n, double p_0, double dp_0, int d) {
  check_dimension(d);
  if (!(p_0 > 0.0)) throw InvalidArgumentError("p_0 must be > 0");
  return (d - 1.0) / d * std::hypot(dp_n / p_0, p_n * dp_0 / (p_0 * p_0));
}

void ReadoutCal::validate() const {
  for (double v : {a_a, b_a, a_b, b_b, swap_b, swap_c}) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("readout parameters must lie in [0, 1]");
  }
}

Eigen::Matrix4d ReadoutCal::matrix() const {
  Eigen::Matrix2d ca, cb;
  ca << a_a, 1.0 - b_a, 1.0 - a_a, b_a;
  cb << a_b, 1.0 - b_b, 1.0 - a_b, b_b;
  // Population index of |ij> in (p00, p10, p01, p11) is i + 2 j.
  Eigen::Matrix4d confusion;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int ip = 0; ip < 2; ++ip)
        for (int jp = 0; jp < 2; ++jp) confusion(ip + 2 * jp, i + 2 * j) = ca(ip, i) * cb(jp, j);
  Eigen::Matrix4d swap = Eigen::Matrix4d::Identity();
  swap(1, 1) = 1.0 - swap_b;
  swap(1, 2) = swap_c;
  swap(2, 1) = swap_b;
  swap(2, 2) = 1.0 - swap_c;
  return swap * confusion;
}

ReadoutResult readout_correct(const Eigen::Vector4d& p_raw, const ReadoutCal& cal) {
  cal.validate();
  if (!p_raw.allFinite() || std::abs(p_raw.sum() - 1.0) > 1e-6) {
    throw InvalidArgumentError("raw populations must sum to 1");
  }
  const Eigen::Matrix4d m = cal.matrix();
  const double det = m.determinant();
  if (std::abs(det) <= 1e-6) {
    std::ostringstream os;
    os << "readout calibration is singular (det = " << det << ")";
    throw CalibrationError(os.str());
  }
  ReadoutResult out;
  out.p = m * p_raw;
  if ((out.p.array() < 0.0).any()) {
    out.clamped = true;
    out.p = out.p.cwiseMax(0.0);
  }
  const double total = out.p.sum();
  if (!(total > 0.0)) throw CalibrationError("corrected populations vanish");
  out.p /= total;
  return out;
}

double rate_evolve(double p1_0, double gamma_up, double gamma_down, double t) {
  if (!(gamma_up >= 0.0) || !(gamma_down >= 0.0)) throw InvalidArgumentError("rates must be >= 0");
  if (!(t >= 0.0)) throw InvalidArgumentError("time must be >= 0");
  const double total = gamma_up + gamma_down;
  if (total == 0.0) return p1_0;
  const double p_ss = gamma_up / total;
  return p_ss + (p1_0 - p_ss) * std::exp(-total * t);
}

RateFit fit_rates(const std::vector<double>& t_ms, const std::vector<double>& p1) {
  const std::size_t n = t_ms.size();
  if (n < 4 || p1.size() != n) throw FitError("rate fit needs >= 4 points of equal length");
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return t_ms[i] < t_ms[j]; });
  const double span = t_ms[order.back()] - t_ms[order.front()];
  if (!(span > 0.0)) throw FitError("rate fit needs a positive time span");

  // Parameters: steady state, total rate, initial population.
  auto residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    if (!(x(1) > 0.0)) {
      r.setConstant(1e6);
      return;
    }
    for (std::size_t k = 0; k < n; ++k) {
      r(k) = x(0) + (x(2) - x(0)) * std::exp(-x(1) * t_ms[k]) - p1[k];
    }
  };
  Eigen::VectorXd x(3);
  x << p1[order.back()], 3.0 / span, p1[order.front()];
  const auto fit =
      detail::least_squares(residual, x, static_cast<int>(n), Eigen::Vector3d(1e-8, 1e-8 / span, 1e-8));
  if (!fit.converged || !(fit.x(1) > 0.0)) throw FitError("rate fit failed: " + fit.message);

  const double dof = std::max<double>(1.0, static_cast<double>(n) - 3.0);
  const Eigen::VectorXd err = parameter_errors(fit.jacobian, fit.cost / dof);
  RateFit out;
  out.steady_state = fit.x(0);
  out.gamma_up = fit.x(0) * fit.x(1);
  out.gamma_down = (1.0 - fit.x(0)) * fit.x(1);
  out.p1_0 = fit.x(2);
  out.d_p1_0 = err(2);
  // First-order propagation, ignoring the p_ss / rate correlation.
  out.d_gamma_up = std::hypot(err(0) * fit.x(1), fit.x(0) * err(1));
  out.d_gamma_down = std::hypot(err(0) * fit.x(1), (1.0 - fit.x(0)) * err(1));
  out.rms_residual = std::sqrt(fit.cost / static_cast<double>(n));
  return out;
}

const std::array<Matrix4c, 16>& pauli_basis() {
  static const std::array<Matrix4c, 16> basis = [] {
    std::array<Eigen::Matrix2cd, 4> s;
    s[0] << 1, 0, 0, 1;
    s[1] << 0, 1, 1, 0;
    s[2] << 0, cplx(0, -1), cplx(0, 1), 0;
    s[3] << 1, 0, 0, -1;
    std::array<Matrix4c, 16> out;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        Matrix4c p;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
              for (int l = 0; l < 2; ++l) p(2 * i + k, 2 * j + l) = s[a](i, j) * s[b](k, l);
        out[4 * a + b] = p;
      }
    }
    return out;
  }();
  return basis;
}

std::string pauli_label(int index) {
  static const char names[] = {'I', 'X', 'Y', 'Z'};
  if (index < 0 || index >= 16) throw InvalidArgumentError("Pauli index out of range");
  return std::string{names[index / 4], names[index % 4]};
}

MatrixXc chi_from_unitary(const Matrix4c& u) {
  if ((u.adjoint() * u - Matrix4c::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw InvalidArgumentError("chi_from_unitary requires a unitary operator");
  }
  const auto& basis = pauli_basis();
  VectorXc alpha(16);
  for (int i = 0; i < 16; ++i) alpha(i) = (basis[i].adjoint() * u).trace() / 4.0;
  return alpha * alpha.adjoint();
}

double process_fidelity(const MatrixXc& chi_a, const MatrixXc& chi_b) {
  if (chi_a.rows() != 16 || chi_a.cols() != 16 || chi_b.rows() != 16 || chi_b.cols() != 16) {
    throw InvalidArgumentError("process matrices must be 16 x 16");
  }
  return (chi_a * chi_b).trace().real();
}

RbCurve synth_rb_curve(double p, double a, double b, double c,
                       const std::vector<double>& m_values, double sigma, std::uint64_t seed,
                       int n_interleaved) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgumentError("p must lie in (0, 1]");
  if (!(sigma >= 0.0)) throw InvalidArgumentError("sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  RbCurve curve;
  curve.n_interleaved = n_interleaved;
  for (double m : m_values) {
    double y = rb_model(m, p, a, b, c);
    if (sigma > 0.0) y += sigma * noise(rng);
    curve.m_values.push_back(m);
    curve.survival.push_back(std::clamp(y, 0.0, 1.0));
    curve.std.push_back(sigma);
  }
  return curve;
}

RbCurve read_rb_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open RB curve file " + path);
  RbCurve curve;
  std::string line;
  bool header = false;
  int line_no = 0;
  bool have_n = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "m,survival,std,n_interleaved") {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": expected header m,survival,std,n_interleaved");
      }
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (v.size() != 4) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 4 columns");
    }
    const int n_int = static_cast<int>(v[3]);
    if (have_n && n_int != curve.n_interleaved) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": mixed n_interleaved values");
    }
    curve.n_interleaved = n_int;
    have_n = true;
    curve.m_values.push_back(v[0]);
    curve.survival.push_back(v[1]);
    curve.std.push_back(v[2]);
  }
  if (!header) throw ParseError(path + ": missing header row");
  curve.validate();
  return curve;
}

std::string rb_csv(const RbCurve& curve) {
  std::ostringstream os;
  os.precision(17);
  os << "m,survival,std,n_interleaved\n";
  for (std::size_t k = 0; k < curve.m_values.size(); ++k) {
    os << curve.m_values[k] << ',' << curve.survival[k] << ',' << curve.std[k] << ','
       << curve.n_interleaved << '\n';
  }
  return os.str();
}

}  // namespace fluxcz
