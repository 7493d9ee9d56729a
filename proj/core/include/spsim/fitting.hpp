#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>

namespace spsim::fit {

/// Weighted residual vector r(p) = (y - model(p)) / sigma.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LmOptions {
  int max_iterations = 300;
  double relative_tolerance = 1e-13;
  double initial_damping = 1e-3;
  /// Optional in-place projection onto the feasible parameter set.
  std::function<void(Eigen::VectorXd&)> project;
};

struct LmResult {
  Eigen::VectorXd params;
  /// Parameter covariance scaled by the reduced chi-square.
  Eigen::MatrixXd covariance;
  Eigen::VectorXd residuals;
  double chi2 = 0.0;
  int dof = 0;
  int iterations = 0;
  bool converged = false;

  double standard_error(int i) const;
};

/// Levenberg-Marquardt with a central-difference Jacobian.
LmResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd initial,
                             const LmOptions& options = {});

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_error = 0.0;
};

/// Ordinary (or weighted, if weights non-empty) least-squares straight line.
LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights = {});

}  // namespace spsim::fit
