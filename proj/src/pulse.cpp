#include "fluxcz/pulse.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fluxcz/errors.hpp"

namespace fluxcz {

double PulseSpec::ratio() const {
  return eps_b == 0.0 ? std::numeric_limits<double>::quiet_NaN() : eps_a / eps_b;
}

void PulseSpec::validate() const {
  if (!std::isfinite(eps_a) || !std::isfinite(eps_b) || !std::isfinite(f_d)) {
    throw InvalidArgumentError("pulse amplitudes and frequency must be finite");
  }
  if (!(t_width > 0.0) || !std::isfinite(t_width)) {
    throw InvalidArgumentError("t_width must be > 0");
  }
  if (!(t_plateau >= 0.0) || !std::isfinite(t_plateau)) {
    throw InvalidArgumentError("t_plateau must be >= 0");
  }
}

double edge_sigma(double t_width) { return t_width / std::sqrt(kTwoPi); }

namespace {

// Rising edge on [0, t_width], 0 at the start and exactly 1 at the end.
double rising_edge(double s, double t_width) {
  const double sigma = edge_sigma(t_width);
  const double floor = std::exp(-t_width * t_width / (2.0 * sigma * sigma));
  const double x = s - t_width;
  return (std::exp(-x * x / (2.0 * sigma * sigma)) - floor) / (1.0 - floor);
}

}  // namespace

double envelope(double t, const PulseSpec& spec) {
  const double t_gate = spec.t_gate();
  if (!(t >= 0.0 && t <= t_gate)) {
    std::ostringstream os;
    os << "envelope time " << t << " ns outside [0, " << t_gate << "]";
    throw DomainError(os.str());
  }
  if (t < spec.t_width) return rising_edge(t, spec.t_width);
  if (t <= spec.t_width + spec.t_plateau) return 1.0;
  return rising_edge(t_gate - t, spec.t_width);
}

MatrixXc drive_coupling(const JointSystem& joint, double eps_a, double eps_b) {
  return eps_a * joint.charge_a + eps_b * joint.charge_b;
}

MatrixXc drive_operator(const JointSystem& joint, const PulseSpec& spec, double t) {
  const double s = envelope(t, spec) * std::cos(kTwoPi * spec.f_d * t);
  return s * drive_coupling(joint, spec.eps_a, spec.eps_b);
}

}  // namespace fluxcz
