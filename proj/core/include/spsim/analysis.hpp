#pragma once

// Estimators over delay and decay histograms: windowed peak areas, the
// double-sided exponential side-peak envelope, g2(0) and the nearest-peak
// ratio g, and single-exponential lifetime fits.

#include "spsim/hbt.hpp"
#include "spsim/purcell.hpp"

#include <span>
#include <vector>

namespace spsim::analysis {

/// Windowed areas of the peaks at tau = k * period, k in [-k_max, k_max].
struct PeakAreas {
  double window_ns = 4.0;
  double period_ns = source::kDefaultPeriodNs;
  int k_max = 0;
  std::vector<double> areas;  // index k + k_max

  double at(int k) const { return areas.at(static_cast<std::size_t>(k + k_max)); }
};

/// Largest k such that k * period + window / 2 stays inside the histogram.
int max_peak_index(const hbt::CorrelationHistogram& hist, double period_ns, double window_ns);

/// Sum of counts in [k T - W/2, k T + W/2]; bins cut by a window edge
/// contribute in proportion to their overlap. No background subtraction.
PeakAreas integrate_peaks(const hbt::CorrelationHistogram& hist, double period_ns, double window_ns,
                          int k_max);

/// A(k) = a_inf (1 + beta exp(-|k| T / tau_b)).
struct EnvelopeFit {
  double a_inf = 0.0;
  double beta = 0.0;
  double tau_b_ns = 0.0;
  double a_inf_error = 0.0;
  double beta_error = 0.0;
  double tau_b_error = 0.0;
  double period_ns = source::kDefaultPeriodNs;
  double chi2 = 0.0;
  std::vector<double> residuals;  // per fitted peak, data - model

  double model(int k) const;
};

struct EnvelopeOptions {
  bool exclude_center = true;
};

/// Poisson-weighted least squares. For fixed tau_b the model is linear in
/// (a_inf, a_inf beta), so only tau_b is searched numerically. beta is
/// constrained to >= 0; when it hits 0 tau_b is undetermined and reported
/// as one period. tau_b is searched down to T / ln(1000); a fit pinned at
/// that edge is treated the same way.
EnvelopeFit fit_envelope(const PeakAreas& areas, const EnvelopeOptions& options = {});

enum class AInfSource { EnvelopeFit, FarthestPeak };
enum class NearestPeak { SymmetricMean, PositiveOnly };

struct G2Options {
  AInfSource a_inf_source = AInfSource::EnvelopeFit;
  NearestPeak nearest = NearestPeak::SymmetricMean;
  EnvelopeOptions envelope;
};

struct G2Report {
  double window_ns = 0.0;
  double g2_zero = 0.0;
  double g2_zero_error = 0.0;
  double g_nearest = 0.0;
  double g_nearest_error = 0.0;
  double a0 = 0.0;
  double a1 = 0.0;
  double a_inf = 0.0;
  double a_inf_error = 0.0;
  EnvelopeFit envelope;
};

/// g2(0) = A0 / A_inf and g = A0 / A1 with Poisson-propagated errors.
G2Report g2_zero(const PeakAreas& areas, const EnvelopeFit& envelope, const G2Options& options = {});

/// integrate -> fit -> g2 for one window.
G2Report analyze_window(const hbt::CorrelationHistogram& hist, double period_ns, double window_ns,
                        int k_max, const G2Options& options = {});

/// One report per window; k_max < 0 picks the largest index the window allows.
std::vector<G2Report> window_sensitivity(const hbt::CorrelationHistogram& hist, double period_ns,
                                         std::span<const double> windows_ns, int k_max = -1,
                                         const G2Options& options = {});

struct LifetimeOptions {
  /// Tail fit starts this long after the peak bin.
  double fit_start_offset_ns = 0.05;
  /// Instrument response FWHM; the fit models it only when tau < 4 x FWHM.
  double irf_fwhm_ns = 0.025;
};

struct LifetimeFit {
  double tau_ns = 0.0;
  double tau_error = 0.0;
  double amplitude = 0.0;
  bool irf_convolved = false;
  double reduced_chi2 = 0.0;
  std::vector<double> residuals;
};

/// Exponential tail fit with Poisson (iteratively reweighted) least squares.
LifetimeFit fit_lifetime(const hbt::StreakHistogram& hist, const LifetimeOptions& options = {});

/// Ex-Gaussian: unit-area exponential decay from t0 convolved with N(0, sigma^2).
double exgauss_pdf(double t, double t0, double tau, double sigma);

struct DetuningRun {
  double detuning_nm;
  hbt::StreakHistogram streak;
};

struct DecayCurvePoint {
  double abs_detuning_nm;
  double gamma_per_ns;
  double tau_ns;
  double tau_error;
};

struct DecayCurve {
  std::vector<DecayCurvePoint> points;
  purcell::DecayFit fit;
};

/// Lifetime per run, rate = 1/tau, folded to |detuning|, then the Lorentzian
/// decay-rate fit with the centre held at lambda_c.
DecayCurve decay_curve(std::span<const DetuningRun> runs, double lambda_c_nm,
                       const LifetimeOptions& options = {});

}  // namespace spsim::analysis
