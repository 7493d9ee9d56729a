#pragma once

// End-to-end experiment chains shared by the command-line tool and the
// acceptance suite.

#include "config.hpp"

#include "spsim/analysis.hpp"
#include "spsim/cavity_optics.hpp"
#include "spsim/fdtd1d.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace spsim::app {

struct RunOptions {
  std::uint64_t seed = 1;
  std::uint64_t pulses = 0;  // 0: the config's pulse count
  unsigned threads = 0;
};

struct FdtdCrossCheck {
  optics::ReflectanceSpectrum spectrum;
  /// RMS of R_fdtd - R_tmm over the transfer-matrix stopband.
  double stopband_rms = 0.0;
  fdtd::RingdownResult ringdown;
  double q_relative_difference = 0.0;
  double seconds = 0.0;
};

struct CavityOutcome {
  optics::LayerStack stack;
  optics::ReflectanceSpectrum spectrum;
  optics::ResonanceResult resonance;
  std::optional<FdtdCrossCheck> fdtd;
  double seconds = 0.0;
};

CavityOutcome run_cavity(const ExperimentConfig& config, bool cross_check);

/// FDTD reflectance and ringdown of a stack against its TMM resonance.
FdtdCrossCheck fdtd_cross_check(const optics::LayerStack& stack, const optics::ResonanceResult& tmm,
                                double dx_nm);

struct StreakOutcome {
  double detuning_nm = 0.0;
  double true_tau_ns = 0.0;
  hbt::StreakHistogram streak;
  analysis::LifetimeFit fit;
};

/// Emitter at lambda_c + detuning, decay trace folded and fitted.
StreakOutcome run_streak(const ExperimentConfig& config, double detuning_nm, const RunOptions& run);

struct SweepOutcome {
  std::vector<StreakOutcome> runs;
  analysis::DecayCurve curve;
  double purcell_factor = 0.0;
  double q_factor = 0.0;
};

/// One seeded streak run per detuning, then the Lorentzian decay-rate fit.
SweepOutcome run_lifetime_sweep(const ExperimentConfig& config, const RunOptions& run);

struct HbtOutcome {
  hbt::CorrelationHistogram histogram;
  std::vector<analysis::G2Report> reports;  // one per configured window
  std::uint64_t pulses = 0;
  std::size_t photons = 0;
  std::size_t clicks1 = 0;
  std::size_t clicks2 = 0;
};

HbtOutcome run_hbt(const ExperimentConfig& config, const RunOptions& run);

/// g2(0) of a blinking two-photon source without background:
/// 2 p2 / (p_on (p1 + 2 p2)^2).
double closed_form_g2(const source::EmissionModel& emission, const source::BlinkingModel& blinking);

/// Root of closed_form_g2 = target on [0, min(1 - p1, p1 / 2)]; nullopt if none.
std::optional<double> closed_form_p2(double target, const source::EmissionModel& emission,
                                     const source::BlinkingModel& blinking);

struct Calibration {
  double p2 = 0.0;
  double g2 = 0.0;
  int evaluations = 0;
  bool converged = false;
  std::optional<double> closed_form_p2;
};

/// Bisection on p2 with a brute-force simulation per step. Every step reuses
/// the same seed so the estimate is a smooth-ish function of p2. Throws
/// NonBracketing when the target lies outside the reachable range.
Calibration calibrate_p2(const ExperimentConfig& config, double target, double tolerance, const RunOptions& run);

}  // namespace spsim::app
