#include "spsim/analysis.hpp"

#include "spsim/error.hpp"
#include "spsim/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace spsim::analysis {

int max_peak_index(const hbt::CorrelationHistogram& hist, double period_ns, double window_ns) {
  require(period_ns > 0.0 && window_ns > 0.0, "period and window must be > 0");
  return static_cast<int>(std::floor((hist.range_ns - 0.5 * window_ns) / period_ns + 1e-9));
}

PeakAreas integrate_peaks(const hbt::CorrelationHistogram& hist, double period_ns, double window_ns,
                          int k_max) {
  require(period_ns > 0.0 && window_ns > 0.0, "period and window must be > 0");
  require(k_max >= 0, "k_max must be >= 0");
  if (window_ns > period_ns)
    fail(ErrorKind::WindowExceedsPeriod, "window " + std::to_string(window_ns) + " ns exceeds period " +
                                             std::to_string(period_ns) + " ns");
  const double reach = k_max * period_ns + 0.5 * window_ns;
  if (reach > hist.range_ns * (1.0 + 1e-12))
    fail(ErrorKind::RangeExceeded, "peak " + std::to_string(k_max) + " window reaches " +
                                       std::to_string(reach) + " ns beyond the histogram range");
  PeakAreas out;
  out.window_ns = window_ns;
  out.period_ns = period_ns;
  out.k_max = k_max;
  out.areas.assign(static_cast<std::size_t>(2 * k_max + 1), 0.0);
  const double bw = hist.bin_width_ns;
  for (int k = -k_max; k <= k_max; ++k) {
    const double lo = k * period_ns - 0.5 * window_ns;
    const double hi = k * period_ns + 0.5 * window_ns;
    const auto first = static_cast<std::ptrdiff_t>(std::floor((lo + hist.range_ns) / bw)) - 1;
    const auto last = static_cast<std::ptrdiff_t>(std::ceil((hi + hist.range_ns) / bw)) + 1;
    double sum = 0.0;
    for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, first);
         i <= last && i < static_cast<std::ptrdiff_t>(hist.counts.size()); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double overlap = std::min(hi, hist.bin_hi(ui)) - std::max(lo, hist.bin_lo(ui));
      if (overlap <= 0.0) continue;
      // Snap round-off so fully covered bins count exactly once.
      const double frac = overlap >= bw * (1.0 - 1e-9) ? 1.0 : overlap / bw;
      sum += static_cast<double>(hist.counts[ui]) * frac;
    }
    out.areas[static_cast<std::size_t>(k + k_max)] = sum;
  }
  return out;
}

double EnvelopeFit::model(int k) const {
  return a_inf * (1.0 + beta * std::exp(-std::abs(k) * period_ns / tau_b_ns));
}

namespace {

struct LinearSolution {
  double c0 = 0.0, c1 = 0.0, chi2 = std::numeric_limits<double>::infinity();
};

// Weighted fit of y = c0 + c1 x.
LinearSolution solve_linear(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  LinearSolution s;
  const double det = sw * sxx - sx * sx;
  if (std::abs(det) <= 1e-300) return s;
  s.c1 = (sw * sxy - sx * sy) / det;
  s.c0 = (sy - s.c1 * sx) / sw;
  s.chi2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - s.c0 - s.c1 * x[i];
    s.chi2 += w[i] * e * e;
  }
  return s;
}

}  // namespace

EnvelopeFit fit_envelope(const PeakAreas& areas, const EnvelopeOptions& options) {
  if (areas.k_max < 4)
    fail(ErrorKind::InsufficientPeaks,
         "envelope fit needs >= 4 side peaks per sign, got " + std::to_string(areas.k_max));
  std::vector<int> ks;
  std::vector<double> y, w;
  for (int k = -areas.k_max; k <= areas.k_max; ++k) {
    if (k == 0 && options.exclude_center) continue;
    ks.push_back(k);
    y.push_back(areas.at(k));
    w.push_back(1.0 / std::max(areas.at(k), 1.0));
  }
  const double period = areas.period_ns;
  std::vector<double> x(ks.size());
  auto chi2_at = [&](double tau_b) {
    for (std::size_t i = 0; i < ks.size(); ++i) x[i] = std::exp(-std::abs(ks[i]) * period / tau_b);
    return solve_linear(x, y, w);
  };

  EnvelopeFit out;
  out.period_ns = period;

  // Coarse log-spaced scan, then golden-section refinement around the best point.
  // Below lo_tau the nearest side peak carries < 1e-3 of the bunching
  // amplitude and beta is no longer constrained by the data.
  const double lo_tau = period / std::log(1e3), hi_tau = 200.0 * period;
  constexpr int kScan = 400;
  double best_tau = period;
  LinearSolution best;
  std::vector<double> taus(kScan);
  for (int i = 0; i < kScan; ++i) {
    taus[i] = lo_tau * std::pow(hi_tau / lo_tau, static_cast<double>(i) / (kScan - 1));
    const auto s = chi2_at(taus[i]);
    if (s.c1 > 0.0 && s.chi2 < best.chi2) {
      best = s;
      best_tau = taus[i];
    }
  }

  // A best fit on the lower scan edge means the bunching is unresolved.
  const bool bunched = std::isfinite(best.chi2) && best_tau > lo_tau;
  if (bunched) {
    const auto it = std::lower_bound(taus.begin(), taus.end(), best_tau);
    const auto idx = static_cast<std::size_t>(it - taus.begin());
    double a = std::log(taus[idx > 0 ? idx - 1 : 0]);
    double b = std::log(taus[std::min<std::size_t>(idx + 1, kScan - 1)]);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    auto f = [&](double lt) {
      const auto s = chi2_at(std::exp(lt));
      return s.c1 > 0.0 ? s.chi2 : std::numeric_limits<double>::infinity();
    };
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int it2 = 0; it2 < 200 && (b - a) > 1e-13; ++it2) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + gr * (b - a);
        fd = f(d);
      }
    }
    const double lt = 0.5 * (a + b);
    const auto s = chi2_at(std::exp(lt));
    if (s.c1 > 0.0 && s.chi2 <= best.chi2) {
      best = s;
      best_tau = std::exp(lt);
    }
    out.a_inf = best.c0;
    out.beta = best.c1 / best.c0;
    out.tau_b_ns = best_tau;
  } else {
    // No positive bunching amplitude: constant envelope.
    double sw = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      sw += w[i];
      swy += w[i] * y[i];
    }
    out.a_inf = swy / sw;
    out.beta = 0.0;
    out.tau_b_ns = period;
  }
  if (!(out.a_inf > 0.0) || !std::isfinite(out.beta))
    fail(ErrorKind::FitDiverged, "envelope fit produced a non-positive asymptotic area");

  // Residuals and linearised parameter errors.
  out.chi2 = 0.0;
  const Eigen::Index n = static_cast<Eigen::Index>(ks.size());
  const int n_params = out.beta > 0.0 ? 3 : 1;
  Eigen::MatrixXd jac(n, n_params);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = ks[static_cast<std::size_t>(i)];
    const double e = std::exp(-std::abs(k) * period / out.tau_b_ns);
    const double model = out.model(k);
    const double r = y[static_cast<std::size_t>(i)] - model;
    out.residuals.push_back(r);
    out.chi2 += w[static_cast<std::size_t>(i)] * r * r;
    const double sw = std::sqrt(w[static_cast<std::size_t>(i)]);
    jac(i, 0) = sw * (1.0 + out.beta * e);
    if (n_params == 3) {
      jac(i, 1) = sw * out.a_inf * e;
      jac(i, 2) = sw * out.a_inf * out.beta * e * std::abs(k) * period / (out.tau_b_ns * out.tau_b_ns);
    }
  }
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (lu.isInvertible()) {
    const int dof = static_cast<int>(n) - n_params;
    const double scale = dof > 0 ? std::max(1.0, out.chi2 / dof) : 1.0;
    const Eigen::MatrixXd cov = lu.inverse() * scale;
    out.a_inf_error = std::sqrt(std::max(0.0, cov(0, 0)));
    if (n_params == 3) {
      out.beta_error = std::sqrt(std::max(0.0, cov(1, 1)));
      out.tau_b_error = std::sqrt(std::max(0.0, cov(2, 2)));
    }
  } else {
    out.a_inf_error = out.beta_error = out.tau_b_error = std::numeric_limits<double>::infinity();
  }
  return out;
}

G2Report g2_zero(const PeakAreas& areas, const EnvelopeFit& envelope, const G2Options& options) {
  require(areas.k_max >= 1, "need at least the k = +-1 peaks");
  G2Report r;
  r.window_ns = areas.window_ns;
  r.envelope = envelope;
  r.a0 = areas.at(0);
  if (options.a_inf_source == AInfSource::EnvelopeFit) {
    r.a_inf = envelope.a_inf;
    r.a_inf_error = envelope.a_inf_error;
  } else {
    const double far = 0.5 * (areas.at(-areas.k_max) + areas.at(areas.k_max));
    r.a_inf = far;
    r.a_inf_error = std::sqrt(std::max(far, 1.0) / 2.0);
  }
  if (!(r.a_inf > 0.0)) fail(ErrorKind::FitDiverged, "asymptotic peak area must be > 0");
  double a1_var = 0.0;
  if (options.nearest == NearestPeak::SymmetricMean) {
    r.a1 = 0.5 * (areas.at(-1) + areas.at(1));
    a1_var = std::max(areas.at(-1) + areas.at(1), 1.0) / 4.0;
  } else {
    r.a1 = areas.at(1);
    a1_var = std::max(r.a1, 1.0);
  }
  const double a0_var = std::max(r.a0, 1.0);
  r.g2_zero = r.a0 / r.a_inf;
  r.g2_zero_error = std::sqrt(a0_var / (r.a_inf * r.a_inf) +
                              r.a0 * r.a0 * r.a_inf_error * r.a_inf_error / std::pow(r.a_inf, 4));
  if (r.a1 > 0.0) {
    r.g_nearest = r.a0 / r.a1;
    r.g_nearest_error = std::sqrt(a0_var / (r.a1 * r.a1) + r.a0 * r.a0 * a1_var / std::pow(r.a1, 4));
  } else {
    r.g_nearest = std::numeric_limits<double>::infinity();
    r.g_nearest_error = std::numeric_limits<double>::infinity();
  }
  return r;
}

G2Report analyze_window(const hbt::CorrelationHistogram& hist, double period_ns, double window_ns, int k_max,
                        const G2Options& options) {
  if (k_max < 0) k_max = max_peak_index(hist, period_ns, window_ns);
  const auto areas = integrate_peaks(hist, period_ns, window_ns, k_max);
  const auto env = fit_envelope(areas, options.envelope);
  return g2_zero(areas, env, options);
}

std::vector<G2Report> window_sensitivity(const hbt::CorrelationHistogram& hist, double period_ns,
                                         std::span<const double> windows_ns, int k_max,
                                         const G2Options& options) {
  std::vector<G2Report> out;
  for (const double w : windows_ns) out.push_back(analyze_window(hist, period_ns, w, k_max, options));
  return out;
}

double exgauss_pdf(double t, double t0, double tau, double sigma) {
  const double lambda = 1.0 / tau;
  if (sigma <= 0.0) return t < t0 ? 0.0 : lambda * std::exp(-lambda * (t - t0));
  const double z = (t0 + lambda * sigma * sigma - t) / (std::sqrt(2.0) * sigma);
  const double expo = 0.5 * lambda * (2.0 * t0 + lambda * sigma * sigma - 2.0 * t);
  if (z < 5.0) return 0.5 * lambda * std::exp(expo) * std::erfc(z);
  // erfc(z) ~ exp(-z^2) / (z sqrt(pi)) (1 - 1/(2z^2) + 3/(4z^4)); combine exponents.
  const double z2 = z * z;
  const double series = (1.0 - 0.5 / z2 + 0.75 / (z2 * z2)) / (z * std::sqrt(std::numbers::pi));
  return 0.5 * lambda * std::exp(expo - z2) * series;
}

namespace {

struct Tail {
  std::vector<double> t, n;
};

fit::LmResult poisson_irls(const std::vector<double>& counts, const std::function<double(const Eigen::VectorXd&, std::size_t)>& model,
                           Eigen::VectorXd p) {
  std::vector<double> var(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) var[i] = std::max(counts[i], 1.0);
  fit::LmResult lm;
  for (int outer = 0; outer < 8; ++outer) {
    auto residuals = [&](const Eigen::VectorXd& q) {
      Eigen::VectorXd r(static_cast<Eigen::Index>(counts.size()));
      for (std::size_t i = 0; i < counts.size(); ++i)
        r[static_cast<Eigen::Index>(i)] = (counts[i] - model(q, i)) / std::sqrt(var[i]);
      return r;
    };
    fit::LmOptions opts;
    opts.project = [](Eigen::VectorXd& q) {
      q[0] = std::max(q[0], 1e-300);
      q[1] = std::max(q[1], 1e-6);
    };
    lm = fit::levenberg_marquardt(residuals, p, opts);
    const double change = (lm.params - p).norm() / std::max(p.norm(), 1e-300);
    p = lm.params;
    // Pearson weights from the current model; the fixed point is the Poisson MLE.
    for (std::size_t i = 0; i < counts.size(); ++i) var[i] = std::max(model(p, i), 1e-3);
    if (outer > 1 && change < 1e-10) break;
  }
  // Final pass so the reported covariance uses model-based variances.
  auto residuals = [&](const Eigen::VectorXd& q) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(counts.size()));
    for (std::size_t i = 0; i < counts.size(); ++i)
      r[static_cast<Eigen::Index>(i)] = (counts[i] - model(q, i)) / std::sqrt(var[i]);
    return r;
  };
  fit::LmOptions opts;
  opts.project = [](Eigen::VectorXd& q) {
    q[0] = std::max(q[0], 1e-300);
    q[1] = std::max(q[1], 1e-6);
  };
  return fit::levenberg_marquardt(residuals, p, opts);
}

}  // namespace

LifetimeFit fit_lifetime(const hbt::StreakHistogram& hist, const LifetimeOptions& options) {
  require(options.fit_start_offset_ns >= 0.0 && options.irf_fwhm_ns >= 0.0, "invalid lifetime options");
  if (hist.counts.empty() || hist.total() == 0) fail(ErrorKind::NoPeak, "empty decay histogram");
  const auto peak_it = std::max_element(hist.counts.begin(), hist.counts.end());
  const auto peak = static_cast<std::size_t>(peak_it - hist.counts.begin());
  const double t_peak = hist.bin_center(peak);

  Tail tail;
  for (std::size_t i = peak; i < hist.counts.size(); ++i) {
    const double t = hist.bin_center(i);
    if (t < t_peak + options.fit_start_offset_ns - 1e-12) continue;
    tail.t.push_back(t - t_peak);
    tail.n.push_back(static_cast<double>(hist.counts[i]));
  }
  if (tail.t.size() < 4) fail(ErrorKind::NoPeak, "decay tail has fewer than 4 bins");

  // Starting point from a log-linear fit over the bins above 1/e^3 of the first.
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < tail.t.size(); ++i) {
    if (tail.n[i] < std::max(3.0, tail.n.front() * std::exp(-3.0))) break;
    lx.push_back(tail.t[i]);
    ly.push_back(std::log(tail.n[i]));
  }
  double tau0 = 0.5 * (tail.t.back() - tail.t.front());
  double amp0 = tail.n.front();
  if (lx.size() >= 2) {
    const auto line = fit::fit_line(lx, ly);
    if (line.slope < 0.0) {
      tau0 = -1.0 / line.slope;
      amp0 = std::exp(line.intercept);
    }
  }

  auto tail_model = [&](const Eigen::VectorXd& q, std::size_t i) { return q[0] * std::exp(-tail.t[i] / q[1]); };
  Eigen::VectorXd p0(2);
  p0 << amp0, tau0;
  auto lm = poisson_irls(tail.n, tail_model, p0);

  LifetimeFit out;
  out.amplitude = lm.params[0];
  out.tau_ns = lm.params[1];
  out.tau_error = lm.standard_error(1);
  out.reduced_chi2 = lm.dof > 0 ? lm.chi2 / lm.dof : 0.0;
  for (Eigen::Index i = 0; i < lm.residuals.size(); ++i) out.residuals.push_back(lm.residuals[i]);

  if (options.irf_fwhm_ns > 0.0 && out.tau_ns < 4.0 * options.irf_fwhm_ns) {
    // Full-trace fit of an IRF-convolved exponential: (area, tau, onset).
    const double sigma = options.irf_fwhm_ns / hbt::kFwhmPerSigma;
    std::vector<double> t, n;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
      const double ti = hist.bin_center(i);
      if (ti < t_peak - 6.0 * sigma - 2.0 * hist.bin_width_ns) continue;
      t.push_back(ti);
      n.push_back(static_cast<double>(hist.counts[i]));
    }
    auto conv_model = [&](const Eigen::VectorXd& q, std::size_t i) {
      return q[0] * hist.bin_width_ns * exgauss_pdf(t[i], q[2], q[1], sigma);
    };
    Eigen::VectorXd c0(3);
    c0 << static_cast<double>(hist.total()), out.tau_ns, t_peak - sigma;
    auto clm = poisson_irls(n, conv_model, c0);
    out.amplitude = clm.params[0];
    out.tau_ns = clm.params[1];
    out.tau_error = clm.standard_error(1);
    out.reduced_chi2 = clm.dof > 0 ? clm.chi2 / clm.dof : 0.0;
    out.residuals.clear();
    for (Eigen::Index i = 0; i < clm.residuals.size(); ++i) out.residuals.push_back(clm.residuals[i]);
    out.irf_convolved = true;
  }
  if (!std::isfinite(out.tau_ns) || !(out.tau_ns > 0.0))
    fail(ErrorKind::FitDiverged, "lifetime fit produced a non-positive lifetime");
  return out;
}

DecayCurve decay_curve(std::span<const DetuningRun> runs, double lambda_c_nm, const LifetimeOptions& options) {
  if (runs.size() < 4)
    fail(ErrorKind::InsufficientSpan, "decay curve needs >= 4 detunings, got " + std::to_string(runs.size()));
  DecayCurve out;
  std::vector<purcell::RatePoint> points;
  for (const auto& run : runs) {
    const auto fit = fit_lifetime(run.streak, options);
    out.points.push_back({std::abs(run.detuning_nm), 1.0 / fit.tau_ns, fit.tau_ns, fit.tau_error});
    points.push_back({lambda_c_nm + std::abs(run.detuning_nm), 1.0 / fit.tau_ns, fit.tau_error / (fit.tau_ns * fit.tau_ns)});
  }
  out.fit = purcell::fit_decay_model(points, lambda_c_nm);
  return out;
}

}  // namespace spsim::analysis
