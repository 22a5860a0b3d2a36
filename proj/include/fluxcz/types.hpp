#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace fluxcz {

using cplx = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;
using Matrix4c = Eigen::Matrix4cd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Energies are stored as E/h in GHz and times in ns, so 2*pi*E*t is a phase.

// Computational-subspace ordering used throughout: |00>, |01>, |10>, |11>,
// first index qubit A.
inline constexpr int kNumComputational = 4;

inline Matrix4c cz_target() {
  Matrix4c u = Matrix4c::Identity();
  u(3, 3) = -1.0;
  return u;
}

}  // namespace fluxcz
