#include "spsim/fitting.hpp"

#include "spsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spsim::fit {

double LmResult::standard_error(int i) const {
  if (covariance.rows() <= i) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(std::max(0.0, covariance(i, i)));
}

namespace {

Eigen::MatrixXd numeric_jacobian(const ResidualFn& residuals, const Eigen::VectorXd& p,
                                 const std::function<void(Eigen::VectorXd&)>& project,
                                 Eigen::Index m) {
  Eigen::MatrixXd jac(m, p.size());
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double h = 1e-6 * std::max(std::abs(p[j]), 1e-6);
    Eigen::VectorXd up = p, down = p;
    up[j] += h;
    down[j] -= h;
    double span = 2.0 * h;
    // One-sided difference when the projection clips a step.
    if (project) {
      project(up);
      project(down);
      span = up[j] - down[j];
    }
    if (span == 0.0) {
      jac.col(j).setZero();
      continue;
    }
    jac.col(j) = (residuals(up) - residuals(down)) / span;
  }
  return jac;
}

}  // namespace

LmResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd initial,
                             const LmOptions& options) {
  LmResult out;
  Eigen::VectorXd p = std::move(initial);
  if (options.project) options.project(p);
  Eigen::VectorXd r = residuals(p);
  if (!r.allFinite()) fail(ErrorKind::FitDiverged, "non-finite residuals at initial guess");
  double cost = r.squaredNorm();
  double lambda = options.initial_damping;
  const Eigen::Index n = p.size();

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Eigen::MatrixXd jac = numeric_jacobian(residuals, p, options.project, r.size());
    // Residuals are y - f, so the model Jacobian is -jac.
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = -jac.transpose() * r;

    bool improved = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index k = 0; k < n; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-300);
      const Eigen::VectorXd step = a.ldlt().solve(jtr);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      Eigen::VectorXd trial = p + step;
      if (options.project) options.project(trial);
      const Eigen::VectorXd r_trial = residuals(trial);
      const double trial_cost = r_trial.allFinite() ? r_trial.squaredNorm()
                                                    : std::numeric_limits<double>::infinity();
      if (trial_cost <= cost) {
        const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
        const double step_rel = (trial - p).norm() / std::max(p.norm(), 1e-300);
        p = std::move(trial);
        r = r_trial;
        cost = trial_cost;
        lambda = std::max(lambda * 0.3, 1e-15);
        improved = true;
        if (rel < options.relative_tolerance || step_rel < 1e-14) out.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // Damping exhausted: we sit at a (local) minimum to numerical precision.
      out.converged = true;
      break;
    }
    if (out.converged) break;
  }

  out.params = p;
  out.residuals = r;
  out.chi2 = cost;
  out.iterations = iter;
  out.dof = static_cast<int>(r.size() - n);
  const Eigen::MatrixXd jac = numeric_jacobian(residuals, p, options.project, r.size());
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  const double scale = out.dof > 0 ? cost / out.dof : 1.0;
  if (lu.isInvertible()) {
    out.covariance = lu.inverse() * scale;
  } else {
    out.covariance = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity());
  }
  if (!p.allFinite()) fail(ErrorKind::FitDiverged, "parameters became non-finite");
  return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights) {
  require(x.size() == y.size() && x.size() >= 2, "fit_line needs >= 2 paired samples");
  require(weights.empty() || weights.size() == x.size(), "fit_line weight size mismatch");
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (det == 0.0) fail(ErrorKind::FitDiverged, "degenerate abscissa in line fit");
  LineFit out;
  out.slope = (sw * sxy - sx * sy) / det;
  out.intercept = (sy - out.slope * sx) / sw;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const double e = y[i] - out.intercept - out.slope * x[i];
    ss += w * e * e;
  }
  const double dof = static_cast<double>(x.size()) - 2.0;
  const double s2 = dof > 0 ? ss / dof : 0.0;
  out.slope_error = std::sqrt(s2 * sw / det);
  return out;
}

}  // namespace spsim::fit
