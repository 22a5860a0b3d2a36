#pragma once

#include <random>

#include "fluxcz/config.hpp"
#include "fluxcz/device_model.hpp"

namespace fluxcz::fixtures {

inline const DeviceConfig& reference_config() {
  static const DeviceConfig c = load_config(FLUXCZ_CONFIG_DIR "/reference_device.json");
  return c;
}

inline const JointSystem& reference_joint() {
  static const JointSystem j = build_device(reference_config().device, reference_config().numerics);
  return j;
}

// Haar-random pure state of dimension d.
inline VectorXc random_state(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  VectorXc v(d);
  for (int i = 0; i < d; ++i) v(i) = cplx(g(rng), g(rng));
  return v.normalized();
}

inline Matrix4c random_unitary4(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix4c m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Matrix4c> qr(m);
  return qr.householderQ();
}

}  // namespace fluxcz::fixtures
