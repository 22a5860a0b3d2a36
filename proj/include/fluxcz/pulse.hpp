#pragma once

#include "fluxcz/device_model.hpp"
#include "fluxcz/types.hpp"

namespace fluxcz {

// Gaussian flat-top microwave drive. Amplitudes are peak values in GHz.
struct PulseSpec {
  double eps_a = 0.0;
  double eps_b = 0.0;
  double f_d = 0.0;
  double t_width = 15.0;
  double t_plateau = 0.0;

  double t_gate() const { return 2.0 * t_width + t_plateau; }
  // eps_a / eps_b, NaN when eps_b is zero.
  double ratio() const;
  void validate() const;
};

// Edge width of the Gaussian: sigma = t_width / sqrt(2 pi).
double edge_sigma(double t_width);

// Envelope in [0, 1]: normalized Gaussian rise, plateau at 1, mirrored fall.
double envelope(double t, const PulseSpec& spec);

// envelope(t) * cos(2 pi f_d t) * (eps_a n_A + eps_b n_B) in the dressed basis.
MatrixXc drive_operator(const JointSystem& joint, const PulseSpec& spec, double t);

// eps_a n_A + eps_b n_B without time dependence.
MatrixXc drive_coupling(const JointSystem& joint, double eps_a, double eps_b);

}  // namespace fluxcz
