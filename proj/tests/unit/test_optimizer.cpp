#include <cmath>

#include <gtest/gtest.h>

#include "fluxcz/errors.hpp"
#include "fluxcz/gate_design.hpp"
#include "fluxcz/optimizer.hpp"
#include "support.hpp"

using namespace fluxcz;

namespace {

OptBounds box(int n, double lo, double hi) {
  return {VectorXd::Constant(n, lo), VectorXd::Constant(n, hi)};
}

CostValue sphere(const VectorXd& x) { return {(x.array() - 0.3).square().sum(), false, ""}; }

CostValue rosenbrock(const VectorXd& x) {
  double s = 0.0;
  for (int i = 0; i + 1 < x.size(); ++i)
    s += 100.0 * std::pow(x(i + 1) - x(i) * x(i), 2) + std::pow(1.0 - x(i), 2);
  return {s, false, ""};
}

}  // namespace

TEST(Cmaes, SolvesSphere) {
  OptOptions o;
  o.seed = 1;
  o.max_evals = 2000;
  o.initial_step = 0.2;
  o.stagnation_tol = 0.0;
  const auto r = optimize(sphere, VectorXd::Constant(6, -1.0), box(6, -2.0, 2.0), o);
  EXPECT_LT(r.best_cost, 1e-8);
  EXPECT_LE(static_cast<int>(r.trace.size()), 2000);
}

TEST(Cmaes, SolvesRosenbrock) {
  OptOptions o;
  o.seed = 2;
  o.max_evals = 20000;
  o.initial_step = 0.2;
  o.stagnation_tol = 0.0;
  const auto r = optimize(rosenbrock, VectorXd::Zero(4), box(4, -3.0, 3.0), o);
  EXPECT_LT(r.best_cost, 1e-4);
}

TEST(Cmaes, TraceIsDeterministicMonotoneAndInBounds) {
  OptOptions o;
  o.seed = 9;
  o.max_evals = 300;
  const auto b = box(3, -1.0, 2.0);
  const auto r1 = optimize(sphere, VectorXd::Zero(3), b, o);
  const auto r2 = optimize(sphere, VectorXd::Zero(3), b, o);
  const std::vector<std::string> names = {"x", "y", "z"};
  EXPECT_EQ(trace_csv(r1, names), trace_csv(r2, names));
  o.seed = 10;
  EXPECT_NE(trace_csv(optimize(sphere, VectorXd::Zero(3), b, o), names), trace_csv(r1, names));
  double best = INFINITY;
  for (const auto& row : r1.trace) {
    best = std::min(best, row.cost);
    EXPECT_DOUBLE_EQ(row.best_so_far, best);
    EXPECT_TRUE((row.x.array() >= -1.0).all() && (row.x.array() <= 2.0).all());
  }
  EXPECT_DOUBLE_EQ(r1.best_cost, best);
}

TEST(Cmaes, AllInvalidTerminates) {
  OptOptions o;
  o.max_evals = 500;
  const auto r = optimize([](const VectorXd&) { return CostValue{1.0, true, "nope"}; },
                          VectorXd::Zero(2), box(2, -1.0, 1.0), o);
  EXPECT_EQ(r.termination, "all_invalid");
  EXPECT_LT(static_cast<int>(r.trace.size()), 500);
}

TEST(Cmaes, RejectsBadBounds) {
  EXPECT_ANY_THROW(optimize(sphere, VectorXd::Zero(2), box(2, 1.0, -1.0)));
  EXPECT_ANY_THROW(optimize(sphere, VectorXd::Constant(2, 5.0), box(2, -1.0, 1.0)));
}

TEST(GateParams, VectorRoundTripAndVirtualZ) {
  GateParams p{1.1, 20.0, 12.0, 5.19, 0.3, -0.4};
  const auto q = GateParams::from_vector(p.to_vector());
  EXPECT_EQ(q.to_vector(), p.to_vector());
  EXPECT_EQ(GateParams::names().size(), 6u);
  const Matrix4c z = virtual_z(0.3, -0.4);
  EXPECT_NEAR(std::arg(z(1, 1)), -0.4, 1e-15);
  EXPECT_NEAR(std::arg(z(2, 2)), 0.3, 1e-15);
  EXPECT_NEAR(std::arg(z(3, 3)), -0.1, 1e-15);
  EXPECT_EQ(z(0, 0), cplx(1.0));
}

TEST(OrbitCost, ZeroAmplitudeIsIdentityAgainstCz) {
  const auto& j = fixtures::reference_joint();
  OrbitContext ctx;
  ctx.joint = &j;
  ctx.eps_a = 0.0;
  ctx.eps_b = 0.0;
  GateParams p{1.0, 26.0, 15.0, 5.18, 0.0, 0.0};
  const auto [za, zb] = natural_z_angles(p, ctx);
  p.z_a = za;
  p.z_b = zb;
  const auto c = orbit_cost(p, ctx);
  ASSERT_FALSE(c.failed) << c.error;
  const double xi = j.energy({0, 0}) + j.energy({1, 1}) - j.energy({0, 1}) - j.energy({1, 0});
  const double phi = -kTwoPi * xi * 56.0;
  EXPECT_NEAR(c.cost, 1.0 - (4.0 + std::norm(3.0 - std::polar(1.0, phi))) / 20.0, 1e-7);
  EXPECT_NEAR(c.cost, 0.6, 1e-3);
}

TEST(OrbitCost, TunedGateIsGoodAndDetuningHurts) {
  const auto& j = fixtures::reference_joint();
  const auto d = design_gate(j, 0.9, kPi);
  const auto row = tune_gate(j, 15.0, 26.0, 0.9, d.eps_b, d.sync.f_d, 1e-9, 60);
  ASSERT_TRUE(row.converged) << row.error;
  OrbitContext ctx;
  ctx.joint = &j;
  ctx.eps_a = row.eps_a;
  ctx.eps_b = row.eps_b;
  GateParams p{1.0, 26.0, 15.0, row.f_d, 0.0, 0.0};
  std::tie(p.z_a, p.z_b) = natural_z_angles(p, ctx);
  const auto best = orbit_cost(p, ctx);
  EXPECT_NEAR(best.cost, row.fidelity_error, 1e-7);
  p.f_d += 0.001;
  EXPECT_GT(orbit_cost(p, ctx).cost, best.cost);
}

TEST(OrbitCost, InvalidParamsAreFailures) {
  const auto& j = fixtures::reference_joint();
  OrbitContext ctx;
  ctx.joint = &j;
  ctx.eps_a = 0.01;
  ctx.eps_b = 0.01;
  const auto c = orbit_cost(GateParams{1.0, -5.0, 15.0, 5.18, 0.0, 0.0}, ctx);
  EXPECT_TRUE(c.failed);
  EXPECT_EQ(c.cost, 1.0);
}
