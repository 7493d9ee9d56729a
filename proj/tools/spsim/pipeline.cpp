#include "pipeline.hpp"

#include "spsim/error.hpp"
#include "spsim/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace spsim::app {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

source::PulseTrain train_for(const ExperimentConfig& c, const RunOptions& run) {
  auto t = c.train;
  if (run.pulses > 0) t.n_pulses = run.pulses;
  return t;
}

}  // namespace

FdtdCrossCheck fdtd_cross_check(const optics::LayerStack& stack, const optics::ResonanceResult& tmm, double dx_nm) {
  const auto t0 = std::chrono::steady_clock::now();
  FdtdCrossCheck out;
  const auto grid = fdtd::discretize_stack(stack, dx_nm);
  out.spectrum = fdtd::run_reflectance(grid, 950.0, 250.0);
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < out.spectrum.size(); ++i) {
    const double l = out.spectrum.wavelength_nm[i];
    if (l < tmm.stopband_lo_nm || l > tmm.stopband_hi_nm) continue;
    const double d = out.spectrum.reflectance[i] - optics::reflectance(stack, l);
    sum += d * d;
    ++n;
  }
  out.stopband_rms = n > 0 ? std::sqrt(sum / n) : std::numeric_limits<double>::quiet_NaN();

  const auto depth = stack.center_depth_nm("spacer");
  require(depth.has_value(), "cross-check needs a stack with a spacer layer");
  fdtd::RingdownOptions ro;
  // The source must be at least as broad as the mode or too little is stored.
  ro.source_bandwidth_nm = std::max(2.0, 4.0 * tmm.fwhm_nm);
  out.ringdown = fdtd::run_ringdown(grid, fdtd::cell_at_depth(grid, *depth), tmm.lambda_c_nm, ro);
  out.q_relative_difference = std::abs(out.ringdown.q_factor - tmm.q_factor) / tmm.q_factor;
  out.seconds = seconds_since(t0);
  return out;
}

CavityOutcome run_cavity(const ExperimentConfig& config, bool cross_check) {
  const auto t0 = std::chrono::steady_clock::now();
  CavityOutcome out;
  out.stack = optics::build_micropost_stack(config.stack);
  out.spectrum = optics::reflectance_spectrum(out.stack, config.spectrum.min_nm, config.spectrum.max_nm,
                                              config.spectrum.samples);
  out.resonance = optics::find_resonance(out.spectrum);
  out.seconds = seconds_since(t0);
  if (cross_check) out.fdtd = fdtd_cross_check(out.stack, out.resonance, config.spectrum.fdtd_dx_nm);
  return out;
}

StreakOutcome run_streak(const ExperimentConfig& config, double detuning_nm, const RunOptions& run) {
  StreakOutcome out;
  out.detuning_nm = detuning_nm;
  auto emission = config.emission;
  emission.gamma = purcell::decay_rate(config.decay.mode.lambda_c_nm + detuning_nm, config.decay);
  out.true_tau_ns = 1.0 / emission.gamma;
  const auto train = train_for(config, run);
  const auto stream = source::run_source(train, config.blinking, emission, run.seed, {run.threads});
  hbt::StreakSpec spec;
  spec.bin_width_ns = config.streak.bin_width_ns;
  spec.start_ns = config.streak.start_ns;
  spec.period_ns = train.period_ns;
  out.streak = hbt::streak(stream, config.streak.irf_fwhm_ns, spec, rng::derive_seed(run.seed, 1), run.threads);
  analysis::LifetimeOptions lo;
  lo.fit_start_offset_ns = config.streak.fit_start_offset_ns;
  lo.irf_fwhm_ns = config.streak.irf_fwhm_ns;
  out.fit = analysis::fit_lifetime(out.streak, lo);
  return out;
}

SweepOutcome run_lifetime_sweep(const ExperimentConfig& config, const RunOptions& run) {
  const auto detunings = config.detunings_nm.empty() ? default_detunings(config.decay.mode) : config.detunings_nm;
  if (detunings.size() < 4)
    fail(ErrorKind::InsufficientSpan,
         "lifetime sweep needs >= 4 detunings, got " + std::to_string(detunings.size()));
  SweepOutcome out;
  std::vector<analysis::DetuningRun> runs;
  for (std::size_t i = 0; i < detunings.size(); ++i) {
    RunOptions r = run;
    r.seed = rng::derive_seed(run.seed, i);
    if (r.pulses == 0) r.pulses = config.sweep_pulses;
    out.runs.push_back(run_streak(config, detunings[i], r));
    runs.push_back({detunings[i], out.runs.back().streak});
  }
  analysis::LifetimeOptions lo;
  lo.fit_start_offset_ns = config.streak.fit_start_offset_ns;
  lo.irf_fwhm_ns = config.streak.irf_fwhm_ns;
  out.curve = analysis::decay_curve(runs, config.decay.mode.lambda_c_nm, lo);
  out.purcell_factor = purcell::purcell_factor(out.curve.fit.model);
  out.q_factor = out.curve.fit.model.mode.q_factor;
  return out;
}

HbtOutcome run_hbt(const ExperimentConfig& config, const RunOptions& run) {
  HbtOutcome out;
  const auto train = train_for(config, run);
  out.pulses = train.n_pulses;
  const auto stream = source::run_source(train, config.blinking, config.emission, run.seed, {run.threads});
  out.photons = stream.photons.size();
  const auto clicks = hbt::beamsplit_and_detect(stream, config.detector1, config.detector2,
                                                rng::derive_seed(run.seed, 1), {run.threads});
  out.clicks1 = clicks.detector1.size();
  out.clicks2 = clicks.detector2.size();
  out.histogram = hbt::correlate(clicks.detector1, clicks.detector2, config.histogram);
  out.reports = analysis::window_sensitivity(out.histogram, train.period_ns, config.windows_ns, -1, config.g2);
  return out;
}

double closed_form_g2(const source::EmissionModel& e, const source::BlinkingModel& b) {
  const double p_on = b.is_disabled() ? 1.0 : b.on_fraction();
  const double m = e.p1 + 2.0 * e.p2;
  return 2.0 * e.p2 / (p_on * m * m);
}

std::optional<double> closed_form_p2(double target, const source::EmissionModel& e, const source::BlinkingModel& b) {
  const double p_on = b.is_disabled() ? 1.0 : b.on_fraction();
  // 2 p2 = target p_on (p1 + 2 p2)^2  ->  4 a p2^2 + (4 a p1 - 2) p2 + a p1^2 = 0.
  const double a = target * p_on;
  if (a == 0.0) return 0.0;
  const double qa = 4.0 * a, qb = 4.0 * a * e.p1 - 2.0, qc = a * e.p1 * e.p1;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return std::nullopt;
  // Smaller root: the branch with 2 p2 <= p1.
  const double p2 = (-qb - std::sqrt(disc)) / (2.0 * qa);
  if (p2 < 0.0 || p2 > std::min(1.0 - e.p1, 0.5 * e.p1) + 1e-15) return std::nullopt;
  return p2;
}

Calibration calibrate_p2(const ExperimentConfig& config, double target, double tolerance, const RunOptions& run) {
  require(target >= 0.0 && target < 1.0 + 1e-12, "target g2 must lie in [0, 1]");
  require(tolerance > 0.0, "calibration tolerance must be > 0");
  require(config.emission.statistics == source::PhotonStatistics::Truncated,
          "p2 calibration needs truncated photon statistics");
  Calibration out;
  out.closed_form_p2 = closed_form_p2(target, config.emission, config.blinking);
  const auto window = std::find(config.windows_ns.begin(), config.windows_ns.end(), 4.0) != config.windows_ns.end()
                          ? 4.0
                          : config.windows_ns.front();
  auto estimate = [&](double p2) {
    auto c = config;
    c.emission.p2 = p2;
    c.windows_ns = {window};
    ++out.evaluations;
    return run_hbt(c, run).reports.front().g2_zero;
  };
  double lo = 0.0, hi = std::min(1.0 - config.emission.p1, 0.5 * config.emission.p1);
  const double g_lo = estimate(lo);
  if (std::abs(g_lo - target) < tolerance) {
    out.p2 = lo;
    out.g2 = g_lo;
    out.converged = true;
    return out;
  }
  const double g_hi = estimate(hi);
  if (std::abs(g_hi - target) < tolerance) {
    out.p2 = hi;
    out.g2 = g_hi;
    out.converged = true;
    return out;
  }
  if (target < g_lo || target > g_hi)
    fail(ErrorKind::NonBracketing, "target g2 " + std::to_string(target) + " outside the reachable range [" +
                                       std::to_string(g_lo) + ", " + std::to_string(g_hi) + "]");
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = estimate(mid);
    out.p2 = mid;
    out.g2 = g;
    if (std::abs(g - target) < tolerance) {
      out.converged = true;
      break;
    }
    (g < target ? lo : hi) = mid;
    if (hi - lo < 1e-12) break;
  }
  return out;
}

}  // namespace spsim::app
