#pragma once

// Emitter-cavity weak coupling: Lorentzian decay rate vs detuning, the
// Purcell factor, temperature tuning and the matching curve fits.

#include <map>
#include <span>
#include <vector>

namespace spsim::purcell {

struct CavityMode {
  double lambda_c_nm = 880.0;
  double q_factor = 1270.0;

  double linewidth_nm() const { return lambda_c_nm / q_factor; }
};

/// Gamma(lambda) = gamma_min + (gamma_max - gamma_min) L(lambda), rates in 1/ns.
struct DecayModel {
  double gamma_max = 5.0;
  double gamma_min = 1.0;
  CavityMode mode;
};

/// Nominal dot: on-resonance lifetime 0.2 ns, fivefold enhancement.
/// lambda_c = 880 nm is a nominal placeholder.
DecayModel nominal_decay_model();

void validate(const CavityMode& mode);
void validate(const DecayModel& model);

/// 1 / (1 + (2 (lambda_qd - lambda_c) / linewidth)^2).
double lorentzian_coupling(double lambda_qd_nm, const CavityMode& mode);

double decay_rate(double lambda_qd_nm, const DecayModel& model);

double purcell_factor(const DecayModel& model);

struct RatePoint {
  double lambda_qd_nm;
  double gamma_per_ns;
  /// One-sigma uncertainty; the fit is weighted when every point has one.
  double gamma_error = 0.0;
};

struct DecayFit {
  DecayModel model;
  double residual_norm = 0.0;
  double gamma_max_error = 0.0;
  double gamma_min_error = 0.0;
  double linewidth_nm = 0.0;
  double linewidth_error = 0.0;
  int iterations = 0;
};

/// Least-squares fit of gamma_min, gamma_max and the linewidth with the
/// Lorentzian centre held at lambda_c_fixed. Needs >= 4 points at >= 3
/// distinct detunings that reach at least the fitted half-width.
DecayFit fit_decay_model(std::span<const RatePoint> points, double lambda_c_fixed_nm);

/// Temperature tuning: tabulated emitter wavelength (linear interpolation)
/// against a cavity that red-shifts linearly over the table's range.
struct TuningMap {
  std::map<double, double> qd_wavelength_nm;  // temperature K -> lambda_QD
  double cavity_lambda_at_min_nm = 880.0;
  double cavity_shift_nm = 0.3;
  bool cavity_shift_enabled = true;

  double min_temperature() const;
  double max_temperature() const;
  double cavity_wavelength_at(double temperature_k) const;
  double qd_wavelength_at(double temperature_k) const;
};

/// 6-40 K table, dot on resonance at 6 K and ~1.85 nm red of the cavity at 40 K.
TuningMap default_tuning_map();

void validate(const TuningMap& map);

/// Signed lambda_QD(T) - lambda_c(T). Throws OutOfRange outside the table.
double detuning_at_temperature(const TuningMap& map, double temperature_k);

struct SpectrumPoint {
  double wavelength_nm;
  double intensity;
};

struct CavityFit {
  CavityMode mode;
  double amplitude = 0.0;
  double baseline = 0.0;
  double fwhm_nm = 0.0;
  double residual_norm = 0.0;
};

/// Lorentzian peak fit of cavity-filtered background emission.
CavityFit fit_cavity_from_background(std::span<const SpectrumPoint> spectrum);

}  // namespace spsim::purcell
