#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

namespace fluxcz::detail {

using ResidualFn = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& r)>;

struct LsqResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;  // at x
  double cost = 0.0;         // sum of squared residuals
  int status = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

// Levenberg-Marquardt (MINPACK via Eigen) with forward-difference Jacobian.
// `steps` sets the difference step per parameter.
inline LsqResult least_squares(const ResidualFn& f, Eigen::VectorXd x0, int n_residuals,
                               const Eigen::VectorXd& steps, int max_evals = 400,
                               double tol = 1e-12) {
  struct Functor {
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const ResidualFn* fn;
    const Eigen::VectorXd* h;
    int n_in;
    int n_out;
    int* count;

    int inputs() const { return n_in; }
    int values() const { return n_out; }
    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
      ++*count;
      (*fn)(x, r);
      // A non-finite trial point is scored as very bad so the step shrinks.
      if (!r.allFinite()) r.setConstant(1e10);
      return 0;
    }
    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const {
      Eigen::VectorXd r0(n_out), r1(n_out);
      if ((*this)(x, r0) < 0) return -1;
      Eigen::VectorXd xp = x;
      for (int j = 0; j < n_in; ++j) {
        xp(j) = x(j) + (*h)(j);
        if ((*this)(xp, r1) < 0) return -1;
        jac.col(j) = (r1 - r0) / (*h)(j);
        xp(j) = x(j);
      }
      return 0;
    }
  };

  int count = 0;
  Functor functor{&f, &steps, static_cast<int>(x0.size()), n_residuals, &count};
  Eigen::LevenbergMarquardt<Functor> lm(functor);
  lm.parameters.ftol = tol;
  lm.parameters.xtol = tol;
  lm.parameters.maxfev = max_evals;
  const auto status = lm.minimize(x0);

  LsqResult out;
  out.x = x0;
  out.status = static_cast<int>(status);
  out.residual.resize(n_residuals);
  f(x0, out.residual);
  out.jacobian.resize(n_residuals, x0.size());
  functor.df(x0, out.jacobian);
  out.cost = out.residual.squaredNorm();
  out.evaluations = count;
  using S = Eigen::LevenbergMarquardtSpace::Status;
  switch (status) {
    case S::RelativeReductionTooSmall:
    case S::RelativeErrorTooSmall:
    case S::RelativeErrorAndReductionTooSmall:
    case S::CosinusTooSmall:
    case S::FtolTooSmall:
    case S::XtolTooSmall:
    case S::GtolTooSmall:
      out.converged = out.residual.allFinite();
      break;
    default:
      out.converged = false;
  }
  out.message = "status " + std::to_string(out.status);
  return out;
}

}  // namespace fluxcz::detail
