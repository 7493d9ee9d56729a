#pragma once

// Pulse-by-pulse Monte Carlo of a blinking quantum-dot emitter under
// periodic pulsed excitation.

#include "spsim/rng.hpp"

#include <cstdint>
#include <vector>

namespace spsim::source {

/// 76 MHz repetition rate.
inline constexpr double kDefaultPeriodNs = 1000.0 / 76.0;

struct PulseTrain {
  double period_ns = kDefaultPeriodNs;
  std::uint64_t n_pulses = 1;

  double duration_ns() const { return period_ns * static_cast<double>(n_pulses); }
};

enum class InitialState { On, Off, Stationary };

/// Two-state (bright/dark) continuous-time Markov switching.
struct BlinkingModel {
  double k_on = 0.0288;   // dark -> bright, 1/ns
  double k_off = 0.0096;  // bright -> dark, 1/ns
  InitialState initial = InitialState::Stationary;

  /// Always bright.
  static BlinkingModel disabled() { return {0.0, 0.0, InitialState::On}; }
  bool is_disabled() const { return k_on == 0.0 && k_off == 0.0; }
  /// Stationary bright probability k_on / (k_on + k_off).
  double on_fraction() const;
};

enum class PhotonStatistics {
  /// 0, 1 or 2 photons per bright pulse with probabilities (1-p1-p2, p1, p2).
  Truncated,
  /// Poisson-distributed photon number with mean poisson_mean (coherent light).
  Poissonian,
};

struct EmissionModel {
  double gamma = 5.0;  // 1/ns
  double p1 = 0.8;
  double p2 = 0.0;
  PhotonStatistics statistics = PhotonStatistics::Truncated;
  double poisson_mean = 0.8;
  /// Uncorrelated background photons, uniform in time (1/ns). Off by default.
  double background_rate_per_ns = 0.0;

  /// Mean photon number of a bright pulse.
  double mean_photons() const;
};

void validate(const PulseTrain& train);
void validate(const BlinkingModel& model);
void validate(const EmissionModel& model);

struct BlinkInterval {
  double start_ns;
  double end_ns;
  bool on;
};

/// Consecutive intervals tiling [0, duration] with alternating states.
struct BlinkTrajectory {
  std::vector<BlinkInterval> intervals;

  /// State at time t (t in [0, duration]).
  bool state_at(double t_ns) const;
  double on_time_ns() const;
  double duration_ns() const { return intervals.empty() ? 0.0 : intervals.back().end_ns; }
};

/// Exact trajectory: exponential holding times with rate k_off while bright
/// and k_on while dark.
BlinkTrajectory simulate_blinking(const BlinkingModel& model, double duration_ns, rng::Engine& rng);

struct EmissionEvent {
  std::uint64_t pulse_index = 0;
  /// Absolute emission times, sorted, each >= the pulse epoch.
  std::vector<double> times_ns;
};

/// Photon number for one pulse, each photon delayed by an independent
/// Exp(gamma) draw from the epoch. A dark emitter emits nothing.
EmissionEvent sample_pulse_emission(bool is_on, const EmissionModel& model, std::uint64_t pulse_index,
                                    double pulse_epoch_ns, rng::Engine& rng);

struct Photon {
  std::uint64_t pulse_index;
  double time_ns;
};

/// Time-ordered photons of a whole run.
struct EmissionStream {
  std::vector<Photon> photons;
  PulseTrain train;

  /// Groups photons back into per-pulse events (pulses without photons omitted).
  std::vector<EmissionEvent> events() const;
};

struct SourceRunOptions {
  /// Worker threads (0 = hardware). Output does not depend on this.
  unsigned threads = 0;
  /// Pulses per independently seeded block.
  std::uint64_t block_pulses = 1u << 16;
};

/// Blinking trajectory over the whole train, then block-parallel per-pulse
/// emission with one random substream per block. Deterministic for a seed.
EmissionStream run_source(const PulseTrain& train, const BlinkingModel& blinking,
                          const EmissionModel& emission, std::uint64_t seed,
                          const SourceRunOptions& options = {});

}  // namespace spsim::source
