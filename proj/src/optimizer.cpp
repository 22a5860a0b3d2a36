#include "fluxcz/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fluxcz/errors.hpp"
#include "fluxcz/gate_design.hpp"
#include "fluxcz/propagator.hpp"
#include "fluxcz/pulse.hpp"
#include "parallel.hpp"

namespace fluxcz {

void GateParams::validate() const {
  const VectorXd x = to_vector();
  if (!x.allFinite()) throw InvalidArgumentError("gate parameters must be finite");
  if (!(amplitude_scale > 0.0)) throw InvalidArgumentError("amplitude_scale must be > 0");
  if (!(t_width > 0.0)) throw InvalidArgumentError("t_width must be > 0");
  if (!(t_plateau >= 0.0)) throw InvalidArgumentError("t_plateau must be >= 0");
}

VectorXd GateParams::to_vector() const {
  VectorXd x(6);
  x << amplitude_scale, t_plateau, t_width, f_d, z_a, z_b;
  return x;
}

GateParams GateParams::from_vector(const VectorXd& x) {
  if (x.size() != 6) throw InvalidArgumentError("gate parameter vector must have 6 entries");
  return {x(0), x(1), x(2), x(3), x(4), x(5)};
}

const std::vector<std::string>& GateParams::names() {
  static const std::vector<std::string> n = {"amplitude_scale", "t_plateau_ns", "t_width_ns",
                                             "f_d_ghz",         "z_a_rad",      "z_b_rad"};
  return n;
}

Matrix4c virtual_z(double z_a, double z_b) {
  Eigen::Vector4cd d;
  d << 1.0, std::polar(1.0, z_b), std::polar(1.0, z_a), std::polar(1.0, z_a + z_b);
  return d.asDiagonal();
}

namespace {

PulseSpec pulse_of(const GateParams& p, const OrbitContext& ctx) {
  PulseSpec spec;
  spec.eps_a = p.amplitude_scale * ctx.eps_a;
  spec.eps_b = p.amplitude_scale * ctx.eps_b;
  spec.f_d = p.f_d;
  spec.t_width = p.t_width;
  spec.t_plateau = p.t_plateau;
  return spec;
}

Matrix4c projected_raw(const GateParams& p, const OrbitContext& ctx) {
  const MatrixXc u = propagate_computational(*ctx.joint, pulse_of(p, ctx), ctx.tol);
  const auto idx = ctx.joint->computational_indices();
  Matrix4c raw;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) raw(i, j) = u(idx[i], j);
  return raw;
}

double lindblad_cost(const GateParams& p, const OrbitContext& ctx) {
  const JointSystem& joint = *ctx.joint;
  const auto s = spectrum_summary(joint);
  const PulseSpec spec = pulse_of(p, ctx);
  const MatrixXc d = drive_coupling(joint, spec.eps_a, spec.eps_b);

  SixLevelModel model;
  model.delta = s.f_11_21 - s.f_10_20;
  model.delta_detuning = s.f_11_21 - p.f_d;
  model.omega_10_20 = std::abs(d(joint.index_of({2, 0}), joint.index_of({1, 0})));
  model.omega_11_21 = std::abs(d(joint.index_of({2, 1}), joint.index_of({1, 1})));

  LindbladOptions opt;
  opt.t_gate = spec.t_gate();
  opt.tol = std::max(ctx.tol, 1e-10);
  opt.envelope = [spec](double t) { return envelope(std::clamp(t, 0.0, spec.t_gate()), spec); };
  opt.target = virtual_z(p.z_a, p.z_b).adjoint() * cz_target();
  return lindblad_gate_error(model, SixLevelRates::from(ctx.coherence), opt).error;
}

}  // namespace

CostValue orbit_cost(const GateParams& params, const OrbitContext& ctx) {
  if (!ctx.joint) throw InvalidArgumentError("orbit cost needs a joint system");
  CostValue out;
  try {
    params.validate();
    if (ctx.mode == CostMode::kCoherent) {
      const Matrix4c u = virtual_z(params.z_a, params.z_b) * projected_raw(params, ctx);
      out.cost = 1.0 - avg_gate_fidelity(u, cz_target());
    } else {
      out.cost = lindblad_cost(params, ctx);
    }
    if (!std::isfinite(out.cost)) throw NumericalError("non-finite cost");
  } catch (const Error& e) {
    out.cost = 1.0;
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

std::pair<double, double> natural_z_angles(const GateParams& params, const OrbitContext& ctx) {
  const Matrix4c raw = projected_raw(params, ctx);
  const double p00 = std::arg(raw(0, 0));
  return {wrap_phase(p00 - std::arg(raw(2, 2))), wrap_phase(p00 - std::arg(raw(1, 1)))};
}

OptResult optimize(const CostFunction& cost, const VectorXd& x0, const OptBounds& bounds,
                   const OptOptions& options) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw InvalidArgumentError("optimizer needs at least one parameter");
  if (bounds.lower.size() != n || bounds.upper.size() != n) {
    throw InvalidArgumentError("bounds must match the parameter count");
  }
  if (!bounds.lower.allFinite() || !bounds.upper.allFinite() ||
      ((bounds.upper - bounds.lower).array() <= 0.0).any()) {
    throw InvalidArgumentError("bounds must be finite with upper > lower");
  }
  if (((x0 - bounds.lower).array() < 0.0).any() || ((bounds.upper - x0).array() < 0.0).any()) {
    throw InvalidArgumentError("starting point lies outside the bounds");
  }
  if (options.population < 4) throw InvalidArgumentError("population must be >= 4");
  if (options.max_evals < 1) throw InvalidArgumentError("max_evals must be >= 1");
  if (!(options.initial_step > 0.0)) throw InvalidArgumentError("initial step must be > 0");

  const VectorXd range = bounds.upper - bounds.lower;
  auto to_user = [&](const VectorXd& y) -> VectorXd {
    return bounds.lower + range.cwiseProduct(y);
  };

  // Strategy constants (Hansen's defaults).
  const int lambda = options.population;
  const int mu = lambda / 2;
  VectorXd w(mu);
  for (int i = 0; i < mu; ++i) w(i) = std::log(mu + 0.5) - std::log(i + 1.0);
  w /= w.sum();
  const double mueff = 1.0 / w.squaredNorm();
  const double dn = n;
  const double cc = (4.0 + mueff / dn) / (dn + 4.0 + 2.0 * mueff / dn);
  const double cs = (mueff + 2.0) / (dn + mueff + 5.0);
  const double c1 = 2.0 / ((dn + 1.3) * (dn + 1.3) + mueff);
  const double cmu =
      std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((dn + 2.0) * (dn + 2.0) + mueff));
  const double damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (dn + 1.0)) - 1.0) + cs;
  const double chi_n = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));

  VectorXd mean = (x0 - bounds.lower).cwiseQuotient(range);
  double sigma = options.initial_step;
  MatrixXd c = MatrixXd::Identity(n, n);
  MatrixXd b = MatrixXd::Identity(n, n);
  VectorXd d = VectorXd::Ones(n);
  VectorXd pc = VectorXd::Zero(n), ps = VectorXd::Zero(n);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  OptResult result;
  result.seed = options.seed;
  result.best_cost = std::numeric_limits<double>::infinity();
  result.best_x = x0;
  std::vector<double> best_history;
  int evals = 0;

  while (true) {
    const int batch = std::min(lambda, options.max_evals - evals);
    // Sample serially so the random stream does not depend on threading.
    std::vector<VectorXd> ys(batch);
    for (int k = 0; k < batch; ++k) {
      VectorXd y;
      bool inside = false;
      for (int attempt = 0; attempt < 10 && !inside; ++attempt) {
        VectorXd z(n);
        for (int i = 0; i < n; ++i) z(i) = normal(rng);
        y = mean + sigma * (b * d.asDiagonal() * z);
        inside = (y.array() >= 0.0).all() && (y.array() <= 1.0).all();
      }
      if (!inside) y = y.cwiseMax(0.0).cwiseMin(1.0);
      ys[k] = y;
    }

    std::vector<CostValue> values(batch);
    detail::parallel_for(static_cast<std::size_t>(batch),
                         [&](std::size_t k) { values[k] = cost(to_user(ys[k])); });

    bool all_failed = batch > 0;
    for (int k = 0; k < batch; ++k) {
      CostValue& v = values[k];
      if (v.failed || !std::isfinite(v.cost)) {
        v.failed = true;
        v.cost = std::max(1.0, std::isfinite(v.cost) ? v.cost : 1.0);
      } else {
        all_failed = false;
      }
      ++evals;
      const VectorXd xu = to_user(ys[k]);
      if (!v.failed && v.cost < result.best_cost) {
        result.best_cost = v.cost;
        result.best_x = xu;
      }
      OptTraceRow row;
      row.evaluation = evals;
      row.generation = result.generations;
      row.x = xu;
      row.cost = v.cost;
      row.best_so_far = result.best_cost;
      row.failed = v.failed;
      result.trace.push_back(std::move(row));
    }

    if (all_failed) {
      result.termination = "all_invalid";
      break;
    }
    if (batch < lambda || evals >= options.max_evals) {
      result.termination = "max_evals";
      break;
    }

    // Rank and recombine.
    std::vector<int> order(batch);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return values[i].cost < values[j].cost; });
    const VectorXd old_mean = mean;
    mean.setZero();
    for (int i = 0; i < mu; ++i) mean += w(i) * ys[order[i]];

    const VectorXd step = (mean - old_mean) / sigma;
    const MatrixXd c_inv_sqrt = b * d.cwiseInverse().asDiagonal() * b.transpose();
    ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * (c_inv_sqrt * step);
    const double gen = result.generations + 1.0;
    const bool hsig = ps.norm() / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * gen)) / chi_n <
                      1.4 + 2.0 / (dn + 1.0);
    pc = (1.0 - cc) * pc + (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * step;

    MatrixXd rank_mu = MatrixXd::Zero(n, n);
    for (int i = 0; i < mu; ++i) {
      const VectorXd yi = (ys[order[i]] - old_mean) / sigma;
      rank_mu += w(i) * yi * yi.transpose();
    }
    c = (1.0 - c1 - cmu) * c +
        c1 * (pc * pc.transpose() + (hsig ? 0.0 : cc * (2.0 - cc)) * c) + cmu * rank_mu;
    sigma *= std::exp((cs / damps) * (ps.norm() / chi_n - 1.0));
    sigma = std::min(sigma, 1.0);

    c = 0.5 * (c + c.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(c);
    b = eig.eigenvectors();
    d = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt();
    ++result.generations;

    best_history.push_back(result.best_cost);
    const int window = options.stagnation_generations;
    if (window > 0 && static_cast<int>(best_history.size()) > window) {
      const double before = best_history[best_history.size() - 1 - window];
      if (before - result.best_cost < options.stagnation_tol) {
        result.termination = "stagnation";
        break;
      }
    }
    if (!(sigma * d.maxCoeff() > 1e-14)) {
      result.termination = "stagnation";
      break;
    }
  }
  return result;
}

std::string trace_csv(const OptResult& result, const std::vector<std::string>& names) {
  std::ostringstream os;
  os.precision(17);
  os << "evaluation,generation";
  for (const auto& n : names) os << ',' << n;
  os << ",cost,best_so_far,failed\n";
  for (const auto& row : result.trace) {
    os << row.evaluation << ',' << row.generation;
    for (Eigen::Index i = 0; i < row.x.size(); ++i) os << ',' << row.x(i);
    os << ',' << row.cost << ',' << row.best_so_far << ',' << (row.failed ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace fluxcz
