#include "spsim/purcell.hpp"

#include "spsim/error.hpp"
#include "spsim/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spsim::purcell {

DecayModel nominal_decay_model() { return DecayModel{5.0, 1.0, CavityMode{880.0, 1270.0}}; }

void validate(const CavityMode& mode) {
  require(mode.lambda_c_nm > 0.0 && std::isfinite(mode.lambda_c_nm), "cavity wavelength must be > 0");
  require(mode.q_factor > 0.0 && std::isfinite(mode.q_factor), "cavity Q must be > 0");
}

void validate(const DecayModel& model) {
  validate(model.mode);
  require(model.gamma_min > 0.0, "gamma_min must be > 0");
  require(model.gamma_max >= model.gamma_min, "gamma_max must be >= gamma_min");
}

double lorentzian_coupling(double lambda_qd_nm, const CavityMode& mode) {
  validate(mode);
  const double x = 2.0 * (lambda_qd_nm - mode.lambda_c_nm) / mode.linewidth_nm();
  return 1.0 / (1.0 + x * x);
}

double decay_rate(double lambda_qd_nm, const DecayModel& model) {
  return model.gamma_min + (model.gamma_max - model.gamma_min) * lorentzian_coupling(lambda_qd_nm, model.mode);
}

double purcell_factor(const DecayModel& model) {
  validate(model);
  return model.gamma_max / model.gamma_min;
}

DecayFit fit_decay_model(std::span<const RatePoint> points, double lambda_c_fixed_nm) {
  require(lambda_c_fixed_nm > 0.0, "lambda_c must be > 0");
  if (points.size() < 4)
    fail(ErrorKind::InsufficientSpan, "need >= 4 rate points, got " + std::to_string(points.size()));
  struct Folded {
    double first;   // |detuning|
    double second;  // gamma
    double sigma;
    bool operator<(const Folded& o) const { return first < o.first; }
  };
  // Weighted only when every point carries an error.
  const bool weighted = std::all_of(points.begin(), points.end(), [](const RatePoint& p) { return p.gamma_error > 0.0; });
  std::vector<Folded> folded;
  for (const auto& p : points) {
    require(std::isfinite(p.lambda_qd_nm) && std::isfinite(p.gamma_per_ns) && p.gamma_per_ns > 0.0,
            "rate points must be finite with gamma > 0");
    require(std::isfinite(p.gamma_error) && p.gamma_error >= 0.0, "rate errors must be finite and >= 0");
    folded.push_back({std::abs(p.lambda_qd_nm - lambda_c_fixed_nm), p.gamma_per_ns, weighted ? p.gamma_error : 1.0});
  }
  std::stable_sort(folded.begin(), folded.end());
  int distinct = 1;
  for (std::size_t i = 1; i < folded.size(); ++i)
    if (folded[i].first - folded[i - 1].first > 1e-12 * std::max(1.0, folded[i].first)) ++distinct;
  if (distinct < 3)
    fail(ErrorKind::InsufficientSpan, "rate points cover fewer than 3 distinct detunings");

  double g_hi = 0.0, g_lo = folded.front().second;
  for (const auto& f : folded) {
    g_hi = std::max(g_hi, f.second);
    g_lo = std::min(g_lo, f.second);
  }
  // Half-width guess from the first mid-level crossing.
  const double mid = 0.5 * (g_hi + g_lo);
  double half_width = folded.back().first;
  for (std::size_t i = 1; i < folded.size(); ++i) {
    if (folded[i - 1].second >= mid && folded[i].second < mid) {
      const double f = (folded[i - 1].second - mid) / (folded[i - 1].second - folded[i].second);
      half_width = folded[i - 1].first + f * (folded[i].first - folded[i - 1].first);
      break;
    }
  }
  half_width = std::max(half_width, 1e-6);

  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(folded.size());
    for (std::size_t i = 0; i < folded.size(); ++i) {
      const double x = 2.0 * folded[i].first / p[2];
      r[static_cast<Eigen::Index>(i)] =
          (folded[i].second - (p[0] + (p[1] - p[0]) / (1.0 + x * x))) / folded[i].sigma;
    }
    return r;
  };
  fit::LmOptions opts;
  opts.project = [](Eigen::VectorXd& p) { p[2] = std::max(p[2], 1e-9); };
  Eigen::VectorXd p0(3);
  p0 << g_lo, g_hi, 2.0 * half_width;
  const auto lm = fit::levenberg_marquardt(residuals, p0, opts);

  DecayFit out;
  const double gmin = lm.params[0], gmax = lm.params[1], width = lm.params[2];
  if (!std::isfinite(gmin) || !std::isfinite(gmax) || !(gmin > 0.0) || !(gmax >= gmin))
    fail(ErrorKind::FitDiverged, "Lorentzian decay fit produced invalid rates");
  if (folded.back().first < 0.5 * width)
    fail(ErrorKind::InsufficientSpan, "rate points do not reach the fitted half-width");
  out.model.gamma_min = gmin;
  out.model.gamma_max = gmax;
  out.model.mode.lambda_c_nm = lambda_c_fixed_nm;
  out.model.mode.q_factor = lambda_c_fixed_nm / width;
  out.linewidth_nm = width;
  out.residual_norm = std::sqrt(lm.chi2);
  out.gamma_min_error = lm.standard_error(0);
  out.gamma_max_error = lm.standard_error(1);
  out.linewidth_error = lm.standard_error(2);
  out.iterations = lm.iterations;
  return out;
}

double TuningMap::min_temperature() const { return qd_wavelength_nm.begin()->first; }
double TuningMap::max_temperature() const { return qd_wavelength_nm.rbegin()->first; }

double TuningMap::cavity_wavelength_at(double t) const {
  if (!cavity_shift_enabled) return cavity_lambda_at_min_nm;
  const double span = max_temperature() - min_temperature();
  return cavity_lambda_at_min_nm + cavity_shift_nm * (t - min_temperature()) / span;
}

double TuningMap::qd_wavelength_at(double t) const {
  auto hi = qd_wavelength_nm.lower_bound(t);
  if (hi == qd_wavelength_nm.end()) fail(ErrorKind::OutOfRange, "temperature above tuning table");
  if (hi->first == t) return hi->second;
  if (hi == qd_wavelength_nm.begin()) fail(ErrorKind::OutOfRange, "temperature below tuning table");
  auto lo = std::prev(hi);
  const double f = (t - lo->first) / (hi->first - lo->first);
  return lo->second + f * (hi->second - lo->second);
}

TuningMap default_tuning_map() {
  TuningMap m;
  m.qd_wavelength_nm = {{6.0, 880.00},  {10.0, 880.05}, {15.0, 880.15}, {20.0, 880.35},
                        {25.0, 880.65}, {30.0, 881.05}, {35.0, 881.55}, {40.0, 882.15}};
  m.cavity_lambda_at_min_nm = 880.0;
  m.cavity_shift_nm = 0.3;
  return m;
}

void validate(const TuningMap& map) {
  require(map.qd_wavelength_nm.size() >= 2, "tuning table needs >= 2 temperatures");
  double prev = -1.0;
  for (const auto& [t, l] : map.qd_wavelength_nm) {
    require(t >= 0.0 && l > 0.0, "tuning table entries must be positive");
    require(l >= prev, "emitter wavelength must be monotone in temperature");
    prev = l;
  }
}

double detuning_at_temperature(const TuningMap& map, double t) {
  validate(map);
  if (!(t >= map.min_temperature() && t <= map.max_temperature()))
    fail(ErrorKind::OutOfRange, "temperature " + std::to_string(t) + " K outside tuning range [" +
                                    std::to_string(map.min_temperature()) + ", " +
                                    std::to_string(map.max_temperature()) + "] K");
  return map.qd_wavelength_at(t) - map.cavity_wavelength_at(t);
}

namespace {

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

CavityFit fit_cavity_from_background(std::span<const SpectrumPoint> spectrum) {
  if (spectrum.size() < 5) fail(ErrorKind::NoPeak, "spectrum needs >= 5 samples");
  std::vector<double> intensity;
  for (const auto& s : spectrum) {
    require(std::isfinite(s.wavelength_nm) && std::isfinite(s.intensity), "non-finite spectrum sample");
    intensity.push_back(s.intensity);
  }
  for (std::size_t i = 1; i < spectrum.size(); ++i)
    require(spectrum[i].wavelength_nm > spectrum[i - 1].wavelength_nm, "wavelengths must increase");

  const double base = median(intensity);
  const auto peak_it = std::max_element(intensity.begin(), intensity.end());
  const std::size_t peak = static_cast<std::size_t>(peak_it - intensity.begin());
  const double prominence = *peak_it - base;
  std::vector<double> diffs;
  for (std::size_t i = 1; i < intensity.size(); ++i) diffs.push_back(std::abs(intensity[i] - intensity[i - 1]));
  const double noise = 1.4826 * median(diffs) / std::sqrt(2.0);
  if (!(prominence > 5.0 * noise) || !(prominence > 1e-12 * std::abs(*peak_it)))
    fail(ErrorKind::NoPeak, "no peak stands out of the background");

  // Half-maximum width guess.
  const double half = base + 0.5 * prominence;
  std::size_t a = peak, b = peak;
  while (a > 0 && intensity[a] > half) --a;
  while (b + 1 < intensity.size() && intensity[b] > half) ++b;
  double width = spectrum[b].wavelength_nm - spectrum[a].wavelength_nm;
  if (!(width > 0.0)) width = spectrum[1].wavelength_nm - spectrum[0].wavelength_nm;

  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(spectrum.size()));
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
      const double x = 2.0 * (spectrum[i].wavelength_nm - p[1]) / p[2];
      r[static_cast<Eigen::Index>(i)] = spectrum[i].intensity - (p[3] + p[0] / (1.0 + x * x));
    }
    return r;
  };
  fit::LmOptions opts;
  opts.project = [](Eigen::VectorXd& p) { p[2] = std::max(std::abs(p[2]), 1e-9); };
  Eigen::VectorXd p0(4);
  p0 << prominence, spectrum[peak].wavelength_nm, width, base;
  const auto lm = fit::levenberg_marquardt(residuals, p0, opts);
  const double lo = spectrum.front().wavelength_nm, hi = spectrum.back().wavelength_nm;
  if (!lm.params.allFinite() || lm.params[0] <= 0.0 || lm.params[1] < lo || lm.params[1] > hi)
    fail(ErrorKind::FitDiverged, "Lorentzian peak fit left the sampled range");

  CavityFit out;
  out.amplitude = lm.params[0];
  out.mode.lambda_c_nm = lm.params[1];
  out.fwhm_nm = lm.params[2];
  out.baseline = lm.params[3];
  out.mode.q_factor = out.mode.lambda_c_nm / out.fwhm_nm;
  out.residual_norm = std::sqrt(lm.chi2);
  return out;
}

}  // namespace spsim::purcell
