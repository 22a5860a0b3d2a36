#include <cmath>

#include <gtest/gtest.h>

#include "fluxcz/errors.hpp"
#include "fluxcz/gate_design.hpp"
#include "fluxcz/open_system.hpp"

using namespace fluxcz;

namespace {

SixLevelModel synced_model(double delta, double r) {
  const auto s = sync_parameters(delta, r, kPi, 0.0);
  return {delta, s.delta_detuning, s.omega_10_20, s.omega_11_21};
}

VectorXc basis6(int k) {
  VectorXc v = VectorXc::Zero(6);
  v(k) = 1.0;
  return v;
}

}  // namespace

TEST(Analytic, AverageOverProductStates) {
  const CoherenceSet c;
  const double t = 45.5;
  // Weight of |10> (resp. |11>) in each of the 16 product states.
  const double single[4] = {0.0, 1.0, 0.5, 0.5};  // |<1|s>|^2 for s in {0, 1, +, +i}
  double e10 = 0.0, e11 = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const double w10 = single[a] * (1.0 - single[b]);
      const double w11 = single[a] * single[b];
      e10 += analytic_state_error(w10, c.gamma1_10_20(), c.gamma_phi_10_20(), t * 1e-3);
      e11 += analytic_state_error(w11, c.gamma1_11_21(), c.gamma_phi_11_21(), t * 1e-3);
    }
  const auto a = analytic_gate_error(c, t);
  EXPECT_NEAR(a.contribution_10_20, e10 / 16.0, 1e-15);
  EXPECT_NEAR(a.contribution_11_21, e11 / 16.0, 1e-15);
  EXPECT_NEAR(a.total, a.contribution_10_20 + a.contribution_11_21, 1e-15);
  EXPECT_NEAR(a.dephasing_approx, 0.15 * 0.0455 * (1.0 / 2.5 + 1.0 / 1.7), 1e-15);
}

TEST(Analytic, StateErrorLimits) {
  EXPECT_EQ(analytic_state_error(0.0, 0.1, 0.2, 10.0), 0.0);
  EXPECT_NEAR(analytic_state_error(1.0, 0.1, 0.0, 10.0), 3.0 * 0.1 * 10.0 / 8.0, 1e-15);
  EXPECT_THROW(analytic_state_error(1.5, 0.1, 0.0, 1.0), InvalidArgumentError);
  EXPECT_THROW(analytic_state_error(0.5, -0.1, 0.0, 1.0), InvalidArgumentError);
}

TEST(Rates, ConversionAndValidation) {
  const CoherenceSet c;
  const auto r = SixLevelRates::from(c, 2.0);
  EXPECT_NEAR(r.gamma1_10_20, 2e-3 / 8.9, 1e-18);
  EXPECT_NEAR(r.gamma_phi_11_21, 2e-3 * (1.0 / 1.7 - 0.5 / 6.1), 1e-18);
  CoherenceSet bad;
  bad.t2r_10_20 = 2.0 * bad.t1_10_20 + 1.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Lindblad, PureDecayOfExcitedLevel) {
  const CoherenceSet c;
  const auto rates = SixLevelRates::from(c);
  LindbladOptions o;
  o.t_gate = 100.0;
  o.initial_states = {basis6(4)};
  const auto r = lindblad_gate_error({0.02, 0.01, 0.0, 0.0}, rates, o);
  EXPECT_NEAR(r.error, 1.0 - std::exp(-100.0 * rates.gamma1_10_20), 1e-8);
}

TEST(Lindblad, RamseyDecayOfSuperposition) {
  const CoherenceSet c;
  LindbladOptions o;
  o.t_gate = 300.0;
  o.initial_states = {(basis6(2) + basis6(4)) / std::sqrt(2.0)};
  const auto r = lindblad_gate_error({0.02, 0.01, 0.0, 0.0}, SixLevelRates::from(c), o);
  const double f = 0.5 + 0.5 * std::exp(-0.3 / c.t2r_10_20);
  EXPECT_NEAR(r.error, 1.0 - f, 1e-8);
}

TEST(Lindblad, NoiselessSyncedGateIsConditionalPi) {
  const double t = 1.0 / 0.022;
  const auto model = synced_model(0.022, 1.36);
  LindbladOptions o;
  o.t_gate = t;
  const auto free = lindblad_gate_error(model, {}, o);
  EXPECT_EQ(free.per_state.size(), 16u);
  EXPECT_LT(free.error, 1e-9);

  // Reference block from exp(-2 pi i H t) by eigendecomposition.
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(model.hamiltonian());
  const VectorXc ph = (es.eigenvalues().cast<cplx>() * cplx(0.0, -kTwoPi * t)).array().exp().matrix();
  const MatrixXc u = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
  const Matrix4c block = u.topLeftCorner(4, 4);
  EXPECT_LT((block.adjoint() * block - Matrix4c::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  const double cond = std::arg(block(3, 3)) + std::arg(block(0, 0)) - std::arg(block(1, 1)) -
                      std::arg(block(2, 2));
  EXPECT_NEAR(std::abs(std::remainder(cond, kTwoPi)), kPi, 1e-9);
  o.target = block;
  EXPECT_LT(lindblad_gate_error(model, {}, o).error, 1e-9);
  o.target = cz_target();
  EXPECT_GT(lindblad_gate_error(model, {}, o).error, 1e-3);
}

TEST(Lindblad, TracePositivityAndLinearityInRates) {
  const auto model = synced_model(1.0 / 45.5, 1.36);
  LindbladOptions o;
  o.t_gate = 45.5;
  const auto lo = lindblad_gate_error(model, SixLevelRates::from(CoherenceSet{}, 0.01), o);
  const auto hi = lindblad_gate_error(model, SixLevelRates::from(CoherenceSet{}, 0.1), o);
  EXPECT_LT(hi.max_trace_deviation, 1e-8);
  EXPECT_GT(hi.min_eigenvalue, -1e-8);
  EXPECT_NEAR(hi.error / lo.error, 10.0, 0.1);
}

TEST(Lindblad, ProductStates) {
  const auto s = product_states_16();
  ASSERT_EQ(s.size(), 16u);
  for (const auto& v : s) {
    EXPECT_NEAR(v.norm(), 1.0, 1e-15);
    EXPECT_EQ(v(4), cplx(0.0));
    EXPECT_EQ(v(5), cplx(0.0));
  }
}
