#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fluxcz/types.hpp"

namespace fluxcz {

// Survival probability versus number of Cliffords m.
struct RbCurve {
  std::vector<double> m_values;
  std::vector<double> survival;
  std::vector<double> std;  // per-point standard deviation, 0 when unknown
  int n_interleaved = 0;

  void validate() const;
};

// Fit of a + b p^m + c (m - 1) p^(m - 2).
struct RbFit {
  double p = 0.0, a = 0.0, b = 0.0, c = 0.0;
  double dp = 0.0, da = 0.0, db = 0.0, dc = 0.0;
  double rms_residual = 0.0;
  bool weighted = false;  // residuals divided by the per-point std
  bool p_at_bound = false;
  int evaluations = 0;
};

double rb_model(double m, double p, double a, double b, double c);

RbFit fit_rb(const RbCurve& curve);

// Simultaneous fit of several curves (e.g. n = 0, 1, ... interleaved gates)
// with shared a, b, c and one p per curve.
struct RbJointFit {
  std::vector<double> p, dp;
  double a = 0.0, b = 0.0, c = 0.0;
  double da = 0.0, db = 0.0, dc = 0.0;
  double rms_residual = 0.0;
  bool weighted = false;
  int evaluations = 0;
};
RbJointFit fit_rb_joint(const std::vector<RbCurve>& curves);

// F = 1 - (d - 1)/d (1 - p) and its inverse, d in {2, 4}.
double clifford_fidelity(double p, int d);
double depolarizing_from_fidelity(double fidelity, int d);

struct InterleavedError {
  double error = 0.0;
  bool warning = false;  // p_gate > p_ref, error is negative
};
InterleavedError interleaved_error(double p_gate, double p_ref, int d);

double rb_error_bar(double p_n, double dp_n, double p_0, double dp_0, int d);

// Readout confusion (C_A, C_B) and excitation-swap (b, c) parameters.
struct ReadoutCal {
  double a_a = 1.0, b_a = 1.0, a_b = 1.0, b_b = 1.0;
  double swap_b = 0.0, swap_c = 0.0;

  void validate() const;
  // Swap matrix times C_A (x) C_B on populations ordered (p00, p10, p01, p11),
  // first label qubit A.
  Eigen::Matrix4d matrix() const;
};

struct ReadoutResult {
  Eigen::Vector4d p = Eigen::Vector4d::Zero();  // (p00, p10, p01, p11)
  bool clamped = false;
};
ReadoutResult readout_correct(const Eigen::Vector4d& p_raw, const ReadoutCal& cal);

// Excited population of a two-level rate equation; rates in 1/ms (kHz), t in ms.
double rate_evolve(double p1_0, double gamma_up, double gamma_down, double t);

struct RateFit {
  double gamma_up = 0.0, gamma_down = 0.0, p1_0 = 0.0;
  double d_gamma_up = 0.0, d_gamma_down = 0.0, d_p1_0 = 0.0;
  double steady_state = 0.0;
  double rms_residual = 0.0;
};
RateFit fit_rates(const std::vector<double>& t_ms, const std::vector<double>& p1);

// Two-qubit Pauli products, index 4a + b for sigma_a (x) sigma_b with
// order {I, X, Y, Z} and qubit A first.
const std::array<Matrix4c, 16>& pauli_basis();
std::string pauli_label(int index);

MatrixXc chi_from_unitary(const Matrix4c& u);
double process_fidelity(const MatrixXc& chi_a, const MatrixXc& chi_b);

RbCurve synth_rb_curve(double p, double a, double b, double c,
                       const std::vector<double>& m_values, double sigma, std::uint64_t seed,
                       int n_interleaved = 0);

// CSV with header m,survival,std,n_interleaved; '#' lines are comments.
RbCurve read_rb_csv(const std::string& path);
std::string rb_csv(const RbCurve& curve);

}  // namespace fluxcz
