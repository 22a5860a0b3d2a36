#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "fluxcz/device_model.hpp"
#include "fluxcz/open_system.hpp"

namespace fluxcz {

struct TransitionTimes {
  double t1_us = 0.0;
  double t2r_us = 0.0;
  double t2e_us = 0.0;  // 0 when not measured
};

struct DeviceConfig {
  DeviceParams device;
  double drive_ratio = 0.9;  // eps_a / eps_b
  // Keyed by transition: "00-10", "00-01", "10-20", "11-21".
  std::map<std::string, TransitionTimes> coherence;
  DeviceNumerics numerics;
  double tol = 1e-10;
  std::string canonical;  // normalized JSON text, input to the hash

  // Gate-transition coherence for the open-system model.
  CoherenceSet gate_coherence() const;
  std::uint64_t hash() const;
};

DeviceConfig parse_config(const std::string& text, const std::string& origin = "<string>");
DeviceConfig load_config(const std::string& path);

std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t v);

}  // namespace fluxcz
