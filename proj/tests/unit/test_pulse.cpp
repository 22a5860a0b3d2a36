#include <cmath>

#include <gtest/gtest.h>

#include "fluxcz/errors.hpp"
#include "fluxcz/pulse.hpp"
#include "support.hpp"

using namespace fluxcz;

TEST(Envelope, EdgesPlateauAndMirror) {
  const PulseSpec s{0.01, 0.01, 5.0, 15.0, 26.0};
  EXPECT_DOUBLE_EQ(s.t_gate(), 56.0);
  EXPECT_NEAR(envelope(0.0, s), 0.0, 1e-15);
  EXPECT_NEAR(envelope(s.t_gate(), s), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(envelope(15.0, s), 1.0);
  EXPECT_DOUBLE_EQ(envelope(28.0, s), 1.0);
  EXPECT_DOUBLE_EQ(envelope(41.0, s), 1.0);
  double prev = -1.0;
  for (double t = 0.0; t <= 15.0; t += 0.25) {
    const double e = envelope(t, s);
    EXPECT_GE(e, prev);
    EXPECT_LE(e, 1.0);
    EXPECT_NEAR(e, envelope(s.t_gate() - t, s), 1e-14);
    prev = e;
  }
}

TEST(Envelope, GaussianShapeOfTheRise) {
  const PulseSpec s{0.0, 0.01, 5.0, 10.0, 0.0};
  const double sigma = 10.0 / std::sqrt(2.0 * kPi);
  EXPECT_NEAR(edge_sigma(10.0), sigma, 1e-15);
  const double floor = std::exp(-0.5 * 100.0 / (sigma * sigma));
  for (double t : {1.0, 4.0, 7.5}) {
    const double g = std::exp(-0.5 * (t - 10.0) * (t - 10.0) / (sigma * sigma));
    EXPECT_NEAR(envelope(t, s), (g - floor) / (1.0 - floor), 1e-14);
  }
}

TEST(Envelope, OutsideTheGateIsADomainError) {
  const PulseSpec s{0.0, 0.01, 5.0, 15.0, 0.0};
  EXPECT_THROW(envelope(-1e-9, s), DomainError);
  EXPECT_THROW(envelope(30.0 + 1e-9, s), DomainError);
  EXPECT_THROW(envelope(std::nan(""), s), DomainError);
}

TEST(PulseSpec, ValidationAndRatio) {
  EXPECT_THROW((PulseSpec{0.0, 0.01, 5.0, 0.0, 10.0}.validate()), InvalidArgumentError);
  EXPECT_THROW((PulseSpec{0.0, 0.01, 5.0, 10.0, -1.0}.validate()), InvalidArgumentError);
  EXPECT_THROW((PulseSpec{0.0, INFINITY, 5.0, 10.0, 0.0}.validate()), InvalidArgumentError);
  EXPECT_DOUBLE_EQ((PulseSpec{0.009, 0.01, 5.0, 10.0, 0.0}.ratio()), 0.9);
  EXPECT_TRUE(std::isnan(PulseSpec{0.009, 0.0, 5.0, 10.0, 0.0}.ratio()));
}

TEST(DriveOperator, IsEnvelopeTimesCarrierTimesCoupling) {
  const auto& j = fixtures::reference_joint();
  const PulseSpec s{0.009, 0.01, 5.2, 15.0, 20.0};
  const MatrixXc c = drive_coupling(j, s.eps_a, s.eps_b);
  EXPECT_TRUE(c.isApprox(s.eps_a * j.charge_a + s.eps_b * j.charge_b));
  for (double t : {3.0, 20.0, 47.0}) {
    const MatrixXc d = drive_operator(j, s, t);
    const double f = envelope(t, s) * std::cos(2.0 * kPi * s.f_d * t);
    EXPECT_LT((d - f * c).cwiseAbs().maxCoeff(), 1e-15);
  }
}
