#include "fluxcz/gate_design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fluxcz/errors.hpp"
#include "least_squares.hpp"
#include "parallel.hpp"

namespace fluxcz {

double SyncSolution::sync_residual() const {
  return std::abs(std::hypot(omega_11_21, delta_detuning) -
                  std::hypot(omega_10_20, delta_detuning - delta));
}

SyncSolution sync_parameters(double delta, double r, double target_phase, double f_11_21) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgumentError("delta must be > 0");
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgumentError("r must be > 0");
  const double abs_phase = std::abs(target_phase);
  if (!(abs_phase > 0.0 && abs_phase <= kPi)) {
    throw InvalidArgumentError("target phase magnitude must lie in (0, pi]");
  }
  if (!std::isfinite(f_11_21)) throw InvalidArgumentError("f_11_21 must be finite");

  SyncSolution s;
  s.delta = delta;
  s.r = r;
  s.target_phase = target_phase;
  s.omega = kPi * delta / abs_phase;

  // Equal generalized Rabi frequencies with omega_11 = r omega_10 reduce to
  // (r^2-1) d^2 - 2 r^2 delta d + r^2 delta^2 - (r^2-1) omega^2 = 0; the root
  // below is the one that stays between the two transitions.
  const double r2 = r * r;
  if (r == 1.0) {
    s.delta_detuning = 0.5 * delta;
  } else {
    const double k = r2 - 1.0;
    const double disc = r2 * delta * delta + k * k * s.omega * s.omega;
    s.delta_detuning =
        (r2 * delta * delta - k * s.omega * s.omega) / (r2 * delta + std::sqrt(disc));
  }

  const double w2 = s.omega * s.omega;
  const double o11 = w2 - s.delta_detuning * s.delta_detuning;
  const double o10 = w2 - (s.delta_detuning - delta) * (s.delta_detuning - delta);
  const double slack = -1e-14 * w2;
  if (o11 < slack || o10 < slack) {
    std::ostringstream os;
    os << "no synchronized solution: omega=" << s.omega << " GHz cannot reach both detunings";
    throw InfeasibleError(os.str());
  }
  s.omega_11_21 = std::sqrt(std::max(o11, 0.0));
  s.omega_10_20 = std::sqrt(std::max(o10, 0.0));
  s.t_gate_ideal = 1.0 / s.omega;
  s.f_d = f_11_21 - s.delta_detuning;
  return s;
}

double optimal_detuning_ratio(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgumentError("r must be > 0");
  if (r == 1.0) return 0.5;
  const double r2 = r * r;
  return (r2 - std::sqrt((r2 - 1.0) * (r2 - 1.0) + r2)) / (r2 - 1.0);
}

GeometricPhases geometric_phases(const SyncSolution& solution, double delta) {
  if (!(solution.omega > 0.0)) throw InvalidArgumentError("solution has no Rabi frequency");
  GeometricPhases g;
  g.theta_10 = kTwoPi * (1.0 - (delta - solution.delta_detuning) / solution.omega);
  g.theta_11 = kTwoPi * (1.0 + solution.delta_detuning / solution.omega);
  g.delta_phi = -(g.theta_11 - g.theta_10) / 2.0;
  return g;
}

ChargeRabi rabi_from_charge(const JointSystem& joint, double eps_ratio) {
  if (!std::isfinite(eps_ratio)) throw InvalidArgumentError("drive ratio must be finite");
  const MatrixXc d = drive_coupling(joint, eps_ratio, 1.0);
  ChargeRabi c;
  c.element_10_20 = std::abs(d(joint.index_of({2, 0}), joint.index_of({1, 0})));
  c.element_11_21 = std::abs(d(joint.index_of({2, 1}), joint.index_of({1, 1})));
  if (c.element_10_20 <= 0.0) throw NumericalError("vanishing |10>-|20> drive element");
  c.r = c.element_11_21 / c.element_10_20;
  return c;
}

RabiFit fit_rabi_oscillation(const std::vector<double>& times, const std::vector<double>& pops) {
  const std::size_t n = times.size();
  if (n < 8 || pops.size() != n) throw FitError("Rabi fit needs >= 8 samples of equal length");
  const double span = times.back() - times.front();
  if (!(span > 0.0)) throw FitError("Rabi fit needs a positive time span");

  const double mean = std::accumulate(pops.begin(), pops.end(), 0.0) / static_cast<double>(n);
  // Periodogram peak on a grid four times finer than the natural resolution.
  const double dt = span / static_cast<double>(n - 1);
  const double f_lo = 0.5 / span;
  const double f_hi = 0.5 / dt;
  const double df = 0.25 / span;
  double best_f = f_lo;
  double best_power = -1.0;
  cplx best_c{};
  for (double f = f_lo; f <= f_hi; f += df) {
    cplx c{};
    for (std::size_t k = 0; k < n; ++k) {
      c += (pops[k] - mean) * std::polar(1.0, -kTwoPi * f * times[k]);
    }
    if (std::norm(c) > best_power) {
      best_power = std::norm(c);
      best_f = f;
      best_c = c;
    }
  }
  const auto [lo, hi] = std::minmax_element(pops.begin(), pops.end());

  Eigen::VectorXd x(4);
  x << mean, 0.5 * (*hi - *lo), best_f, std::arg(-best_c);
  auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    for (std::size_t k = 0; k < n; ++k) {
      r(k) = p(0) - p(1) * std::cos(kTwoPi * p(2) * times[k] + p(3)) - pops[k];
    }
  };
  Eigen::VectorXd steps(4);
  steps << 1e-7, 1e-7, 1e-7 / span, 1e-7;
  const auto fit = detail::least_squares(residual, x, static_cast<int>(n), steps, 2000);
  if (!fit.converged) throw FitError("Rabi fit failed: " + fit.message);

  RabiFit out;
  out.offset = fit.x(0);
  out.amplitude = fit.x(1);
  out.frequency = std::abs(fit.x(2));
  out.phase = fit.x(2) < 0.0 ? -fit.x(3) : fit.x(3);
  if (out.amplitude < 0.0) {
    out.amplitude = -out.amplitude;
    out.phase += kPi;
  }
  out.phase = wrap_phase(out.phase);
  out.rms_residual = std::sqrt(fit.cost / static_cast<double>(n));
  return out;
}

ChevronFit fit_chevron(const std::vector<double>& f_d, const std::vector<double>& w) {
  const std::size_t n = f_d.size();
  if (n < 3 || w.size() != n) throw FitError("chevron fit needs >= 3 frequencies");
  // Centre the frequencies first: W^2 and f^2 differ by ~7 orders of magnitude.
  const double fc = std::accumulate(f_d.begin(), f_d.end(), 0.0) / static_cast<double>(n);
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = f_d[k] - fc;
    a(k, 0) = x;
    a(k, 1) = 1.0;
    y(k) = w[k] * w[k] - x * x;
  }
  const Eigen::Vector2d c = a.colPivHouseholderQr().solve(y);
  const double x0 = -0.5 * c(0);
  const double omega2 = c(1) - x0 * x0;
  if (!(omega2 > 0.0)) throw FitError("chevron fit gives a non-positive resonance Rabi frequency");
  ChevronFit out;
  out.f0 = fc + x0;
  out.omega_res = std::sqrt(omega2);
  out.rms_residual = std::sqrt((a * c - y).squaredNorm() / static_cast<double>(n));
  return out;
}

std::vector<double> centered_grid(double center, double half_span, int n) {
  if (n < 1) throw InvalidArgumentError("grid needs at least one point");
  std::vector<double> g(n);
  for (int k = 0; k < n; ++k) {
    g[k] = n == 1 ? center : center - half_span + 2.0 * half_span * k / (n - 1);
  }
  return g;
}

RabiMapRequest default_rabi_request(const JointSystem& joint, double eps_ratio) {
  const auto s = spectrum_summary(joint);
  const auto c = rabi_from_charge(joint, eps_ratio);
  RabiMapRequest req;
  req.eps_ratio = eps_ratio;
  // About 4 MHz on |11>-|21>: slow enough to keep the other transition out.
  req.eps_b = 0.004 / c.element_11_21;
  const double omega_10 = req.eps_b * c.element_10_20;
  const double omega_11 = req.eps_b * c.element_11_21;
  req.f_grid_10 = centered_grid(s.f_10_20, 2.5 * omega_10, 9);
  req.f_grid_11 = centered_grid(s.f_11_21, 2.5 * omega_11, 9);
  req.duration = std::max(600.0, 3.0 / std::min(omega_10, omega_11));
  return req;
}

namespace {

void check_rabi_grid(const std::vector<double>& grid, double f0, const char* name) {
  for (double f : grid) {
    if (std::abs(f - f0) > 0.1) {
      std::ostringstream os;
      os << name << " grid point " << f << " GHz lies more than 0.1 GHz from " << f0;
      throw InvalidArgumentError(os.str());
    }
  }
}

MatrixXc basis_column(const JointSystem& joint, BareLabel label) {
  MatrixXc psi = MatrixXc::Zero(joint.dim(), 1);
  psi(joint.index_of(label), 0) = 1.0;
  return psi;
}

}  // namespace

RabiMap rabi_map(const JointSystem& joint, const RabiMapRequest& req) {
  const auto s = spectrum_summary(joint);
  check_rabi_grid(req.f_grid_10, s.f_10_20, "|10>-|20>");
  check_rabi_grid(req.f_grid_11, s.f_11_21, "|11>-|21>");
  if (!(req.duration > 0.0) || !(req.sample_dt > 0.0)) {
    throw InvalidArgumentError("Rabi map duration and sample step must be > 0");
  }
  const int n_samples = static_cast<int>(std::floor(req.duration / req.sample_dt)) + 1;
  std::vector<double> times(n_samples);
  for (int k = 0; k < n_samples; ++k) times[k] = k * req.sample_dt;

  RabiMap map;
  for (double f : req.f_grid_10) map.traces.push_back({{1, 0}, {2, 0}, f, times, {}, {}});
  for (double f : req.f_grid_11) map.traces.push_back({{1, 1}, {2, 1}, f, times, {}, {}});

  const MatrixXc coupling = drive_coupling(joint, req.eps_ratio * req.eps_b, req.eps_b);
  detail::parallel_for(map.traces.size(), [&](std::size_t i) {
    RabiTrace& tr = map.traces[i];
    const double f = tr.f_d;
    const auto states = propagate_trajectory(
        joint, coupling, [f](double t) { return std::cos(kTwoPi * f * t); }, tr.times,
        basis_column(joint, tr.initial), req.tol);
    const int target = joint.index_of(tr.excited);
    tr.population.resize(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) {
      tr.population[k] = std::norm(states[k](target, 0));
    }
    tr.fit = fit_rabi_oscillation(tr.times, tr.population);
  });

  std::vector<double> f10, w10, f11, w11;
  for (const auto& tr : map.traces) {
    auto& fs = tr.initial.b == 0 ? f10 : f11;
    auto& ws = tr.initial.b == 0 ? w10 : w11;
    fs.push_back(tr.f_d);
    ws.push_back(tr.fit.frequency);
  }
  map.chevron_10 = fit_chevron(f10, w10);
  map.chevron_11 = fit_chevron(f11, w11);
  map.r = map.chevron_11.omega_res / map.chevron_10.omega_res;
  return map;
}

GateResult simulate_square_gate(const JointSystem& joint, double eps_a, double eps_b, double f_d,
                                double duration, double tol) {
  if (!(duration >= 0.0)) throw InvalidArgumentError("duration must be >= 0");
  const auto idx = joint.computational_indices();
  MatrixXc psi0 = MatrixXc::Zero(joint.dim(), kNumComputational);
  for (int k = 0; k < kNumComputational; ++k) psi0(idx[k], k) = 1.0;
  const MatrixXc u = propagate_states(
      joint, drive_coupling(joint, eps_a, eps_b),
      [f_d](double t) { return std::cos(kTwoPi * f_d * t); }, duration, psi0, tol);
  return project_and_fix(u, joint);
}

AmplitudeCalibration calibrate_amplitude(const JointSystem& joint, double eps_ratio,
                                         const std::vector<double>& amplitudes, double duration,
                                         double tol) {
  if (amplitudes.size() < 2) throw InvalidArgumentError("calibration needs >= 2 amplitudes");
  const auto s = spectrum_summary(joint);
  AmplitudeCalibration cal;
  cal.amplitudes = amplitudes;
  cal.omega_10.assign(amplitudes.size(), 0.0);
  cal.omega_11.assign(amplitudes.size(), 0.0);

  const double dt = 2.0;
  const int n = static_cast<int>(duration / dt) + 1;
  std::vector<double> times(n);
  for (int k = 0; k < n; ++k) times[k] = k * dt;

  detail::parallel_for(2 * amplitudes.size(), [&](std::size_t i) {
    const std::size_t a = i / 2;
    const bool upper = i % 2 == 1;
    const double eps_b = amplitudes[a];
    const double f = upper ? s.f_11_21 : s.f_10_20;
    const BareLabel from = upper ? BareLabel{1, 1} : BareLabel{1, 0};
    const BareLabel to = upper ? BareLabel{2, 1} : BareLabel{2, 0};
    const auto states = propagate_trajectory(
        joint, drive_coupling(joint, eps_ratio * eps_b, eps_b),
        [f](double t) { return std::cos(kTwoPi * f * t); }, times, basis_column(joint, from),
        tol);
    std::vector<double> pops(states.size());
    const int target = joint.index_of(to);
    for (std::size_t k = 0; k < states.size(); ++k) pops[k] = std::norm(states[k](target, 0));
    (upper ? cal.omega_11 : cal.omega_10)[a] = fit_rabi_oscillation(times, pops).frequency;
  });

  auto line = [&](const std::vector<double>& y, double& slope, double& intercept) {
    Eigen::MatrixXd m(amplitudes.size(), 2);
    Eigen::VectorXd v(amplitudes.size());
    for (std::size_t k = 0; k < amplitudes.size(); ++k) {
      m(k, 0) = amplitudes[k];
      m(k, 1) = 1.0;
      v(k) = y[k];
    }
    const Eigen::Vector2d c = m.colPivHouseholderQr().solve(v);
    slope = c(0);
    intercept = c(1);
  };
  line(cal.omega_10, cal.slope_10, cal.intercept_10);
  line(cal.omega_11, cal.slope_11, cal.intercept_11);
  return cal;
}

GateDesign design_gate(const JointSystem& joint, double eps_ratio, double target_phase,
                       double r_override) {
  GateDesign d;
  d.spectrum = spectrum_summary(joint);
  d.charge = rabi_from_charge(joint, eps_ratio);
  const double r = r_override > 0.0 ? r_override : d.charge.r;
  d.sync = sync_parameters(d.spectrum.delta, r, target_phase, d.spectrum.f_11_21);
  if (d.spectrum.delta_sign < 0) d.sync.f_d = d.spectrum.f_11_21 + d.sync.delta_detuning;
  d.eps_b = d.sync.omega_11_21 / d.charge.element_11_21;
  d.eps_a = eps_ratio * d.eps_b;
  return d;
}

namespace {

// Integral of the normalized rising edge over [0, t_width].
double edge_area(double t_width) {
  PulseSpec p;
  p.t_width = t_width;
  const int n = 2000;
  double sum = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    sum += w * envelope(t_width * k / n, p);
  }
  return sum * t_width / n;
}

}  // namespace

DurationScanRow tune_gate(const JointSystem& joint, double t_width, double t_plateau,
                          double eps_ratio, double eps_b0, double f_d0, double tol,
                          int max_evals) {
  DurationScanRow row;
  row.t_plateau = t_plateau;
  row.t_gate = 2.0 * t_width + t_plateau;
  if (!(eps_b0 > 0.0)) throw InvalidArgumentError("starting amplitude must be > 0");

  const auto idx = joint.computational_indices();
  const int m = joint.dim();
  std::vector<int> outside;
  for (int k = 0; k < m; ++k) {
    if (std::find(idx.begin(), idx.end(), k) == idx.end()) outside.push_back(k);
  }
  // x = (eps_b / eps_b0, (f_d - f_d0) / 10 MHz), both of order one.
  auto spec_of = [&](const Eigen::VectorXd& x) {
    PulseSpec p;
    p.eps_b = eps_b0 * x(0);
    p.eps_a = eps_ratio * p.eps_b;
    p.f_d = f_d0 + 0.01 * x(1);
    p.t_width = t_width;
    p.t_plateau = t_plateau;
    return p;
  };
  const int n_res = 2 * static_cast<int>(outside.size()) * kNumComputational;
  auto residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    if (!(x(0) > 0.0)) {
      r.setConstant(1.0);
      return;
    }
    const MatrixXc u = propagate_computational(joint, spec_of(x), tol);
    int i = 0;
    for (int c = 0; c < kNumComputational; ++c) {
      for (int k : outside) {
        r(i++) = u(k, c).real();
        r(i++) = u(k, c).imag();
      }
    }
  };

  try {
    Eigen::VectorXd x0(2);
    x0 << 1.0, 0.0;
    const auto fit =
        detail::least_squares(residual, x0, n_res, Eigen::Vector2d(1e-5, 1e-5), max_evals, 1e-10);
    const PulseSpec best = spec_of(fit.x);
    const GateResult g = simulate_gate(joint, best, tol);
    row.eps_a = best.eps_a;
    row.eps_b = best.eps_b;
    row.f_d = best.f_d;
    row.fidelity_error = 1.0 - g.fidelity;
    row.p_leak = g.p_leak;
    row.delta_phi = g.delta_phi;
    row.converged = fit.converged || fit.status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation;
    if (!fit.converged) row.error = "least squares " + fit.message;
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

std::vector<DurationScanRow> gate_error_vs_duration(const JointSystem& joint,
                                                    const DurationScanRequest& req) {
  if (req.durations.empty()) throw InvalidArgumentError("duration list is empty");
  if (!(req.t_width > 0.0)) throw InvalidArgumentError("t_width must be > 0");
  for (double t : req.durations) {
    if (!(t >= 2.0 * req.t_width)) {
      throw InvalidArgumentError("every duration must be at least 2 * t_width");
    }
  }

  const GateDesign design = design_gate(joint, req.eps_ratio, kPi);
  const double area = edge_area(req.t_width);

  std::vector<DurationScanRow> rows;
  double eps_b = 0.0;
  double f_d = design.sync.f_d;
  for (double t_gate : req.durations) {
    const double t_plateau = t_gate - 2.0 * req.t_width;
    if (rows.empty() || !rows.back().converged) {
      // Match the pulse area of the square-pulse design.
      const double t_eff = t_plateau + 2.0 * area;
      eps_b = design.eps_b * design.sync.t_gate_ideal / t_eff;
      f_d = design.sync.f_d;
    }
    DurationScanRow row =
        tune_gate(joint, req.t_width, t_plateau, req.eps_ratio, eps_b, f_d, req.tol, req.max_evals);
    if (row.converged) {
      eps_b = row.eps_b;
      f_d = row.f_d;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<LandscapeRow> error_landscape(const JointSystem& joint, const PulseSpec& base,
                                          const std::vector<double>& detunings,
                                          const std::vector<double>& amplitude_scales,
                                          double tol) {
  base.validate();
  if (detunings.empty() || amplitude_scales.empty()) {
    throw InvalidArgumentError("landscape grids must be non-empty");
  }
  const auto s = spectrum_summary(joint);
  std::vector<LandscapeRow> rows(detunings.size() * amplitude_scales.size());
  detail::parallel_for(rows.size(), [&](std::size_t i) {
    LandscapeRow& row = rows[i];
    row.detuning = detunings[i / amplitude_scales.size()];
    row.amplitude_scale = amplitude_scales[i % amplitude_scales.size()];
    PulseSpec p = base;
    p.eps_a *= row.amplitude_scale;
    p.eps_b *= row.amplitude_scale;
    p.f_d = s.f_11_21 - s.delta_sign * row.detuning;
    try {
      const GateResult g = simulate_gate(joint, p, tol);
      row.fidelity_error = 1.0 - g.fidelity;
      row.p_leak = g.p_leak;
      row.delta_phi = g.delta_phi;
      row.ok = true;
    } catch (const Error&) {
      row.ok = false;
    }
  });
  return rows;
}

}  // namespace fluxcz

namespace fluxcz {

DurationScanRow refine_optimal_duration(const JointSystem& joint, const DurationScanRequest& req,
                                        const std::vector<DurationScanRow>& rows,
                                        double resolution) {
  if (!(resolution > 0.0)) throw InvalidArgumentError("resolution must be > 0");
  int best = -1;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    if (!rows[i].converged) continue;
    if (best < 0 || rows[i].fidelity_error < rows[best].fidelity_error) best = i;
  }
  if (best < 0) throw ConvergenceError("no converged duration to refine");

  const double min_t = 2.0 * req.t_width;
  double lo = best > 0 ? rows[best - 1].t_gate : rows[best].t_gate - resolution;
  double hi = best + 1 < static_cast<int>(rows.size()) ? rows[best + 1].t_gate
                                                        : rows[best].t_gate + resolution;
  lo = std::max(lo, min_t);

  const DurationScanRow& seed = rows[best];
  auto eval = [&](double t) {
    return tune_gate(joint, req.t_width, t - 2.0 * req.t_width, req.eps_ratio, seed.eps_b,
                     seed.f_d, req.tol, req.max_evals);
  };
  auto score = [](const DurationScanRow& r) { return r.converged ? r.fidelity_error : 1.0; };

  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo);
  double x2 = lo + g * (hi - lo);
  DurationScanRow r1 = eval(x1);
  DurationScanRow r2 = eval(x2);
  while (hi - lo > resolution) {
    if (score(r1) <= score(r2)) {
      hi = x2;
      x2 = x1;
      r2 = r1;
      x1 = hi - g * (hi - lo);
      r1 = eval(x1);
    } else {
      lo = x1;
      x1 = x2;
      r1 = r2;
      x2 = lo + g * (hi - lo);
      r2 = eval(x2);
    }
  }
  DurationScanRow out = score(r1) <= score(r2) ? r1 : r2;
  if (score(seed) < score(out)) out = seed;
  return out;
}

}  // namespace fluxcz
