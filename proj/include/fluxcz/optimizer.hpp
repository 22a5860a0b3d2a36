#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fluxcz/device_model.hpp"
#include "fluxcz/open_system.hpp"
#include "fluxcz/types.hpp"

namespace fluxcz {

// The six tunable gate parameters.
struct GateParams {
  double amplitude_scale = 1.0;  // multiplies (eps_a, eps_b)
  double t_plateau = 0.0;        // ns
  double t_width = 15.0;         // ns
  double f_d = 0.0;              // GHz
  double z_a = 0.0;              // rad
  double z_b = 0.0;              // rad

  void validate() const;
  VectorXd to_vector() const;
  static GateParams from_vector(const VectorXd& x);
  static const std::vector<std::string>& names();
};

enum class CostMode { kCoherent, kLindblad };

struct OrbitContext {
  const JointSystem* joint = nullptr;
  double eps_a = 0.0;  // amplitudes at amplitude_scale = 1
  double eps_b = 0.0;
  CoherenceSet coherence;
  CostMode mode = CostMode::kCoherent;
  double tol = 1e-9;
};

struct CostValue {
  double cost = 1.0;
  bool failed = false;
  std::string error;
};

// Virtual-Z correction diag(1, e^{i z_b}, e^{i z_a}, e^{i (z_a + z_b)}).
Matrix4c virtual_z(double z_a, double z_b);

// 1 - F against CZ after left-multiplying the projected gate by virtual_z.
// Lindblad mode scores the six-level master equation against the same target.
CostValue orbit_cost(const GateParams& params, const OrbitContext& context);

// Virtual-Z angles that zero the |01> and |10> phases relative to |00>.
std::pair<double, double> natural_z_angles(const GateParams& params, const OrbitContext& context);

struct OptBounds {
  VectorXd lower;
  VectorXd upper;
};

struct OptOptions {
  int population = 12;        // lambda
  std::uint64_t seed = 0;
  int max_evals = 2000;
  double initial_step = 0.05;  // fraction of each bound range
  int stagnation_generations = 20;
  double stagnation_tol = 1e-6;
};

struct OptTraceRow {
  int evaluation = 0;
  int generation = 0;
  VectorXd x;
  double cost = 0.0;
  double best_so_far = 0.0;
  bool failed = false;
};

struct OptResult {
  std::vector<OptTraceRow> trace;
  VectorXd best_x;
  double best_cost = 0.0;
  int generations = 0;
  std::uint64_t seed = 0;
  std::string termination;  // max_evals, stagnation, all_invalid
};

// Cost returns its value and a failure flag; failures count as cost 1.
using CostFunction = std::function<CostValue(const VectorXd&)>;

// CMA-ES in coordinates normalized to the bound box.
OptResult optimize(const CostFunction& cost, const VectorXd& x0, const OptBounds& bounds,
                   const OptOptions& options = {});

// One CSV row per evaluation with the given parameter names.
std::string trace_csv(const OptResult& result, const std::vector<std::string>& names);

}  // namespace fluxcz
