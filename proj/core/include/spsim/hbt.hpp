#pragma once

// Simulated photon-counting chain: beamsplitter, two avalanche counters,
// start-stop delay histogramming, and a streak-camera style decay trace.

#include "spsim/photon_source.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace spsim::hbt {

/// FWHM = 2 sqrt(2 ln 2) sigma for a Gaussian.
inline constexpr double kFwhmPerSigma = 2.3548200450309493;

struct DetectorModel {
  double efficiency = 1.0;
  /// Timing resolution (Gaussian FWHM).
  double jitter_fwhm_ns = 0.3;
  /// Non-paralyzable dead time after each registered click.
  double dead_time_ns = 50.0;
  /// Flat dark-count rate.
  double dark_rate_per_ns = 0.0;

  double jitter_sigma_ns() const { return jitter_fwhm_ns / kFwhmPerSigma; }
};

void validate(const DetectorModel& det);

/// Ideal pass/block bandpass in front of the correlator.
struct SpectralFilter {
  bool enabled = false;
  double center_nm = 880.0;
  double bandwidth_nm = 0.1;

  bool passes(double line_nm) const;
};

struct ClickRecord {
  int detector;  // 1 or 2
  double time_ns;
};

struct ClickStreams {
  std::vector<double> detector1;
  std::vector<double> detector2;

  /// Both detectors interleaved in time order.
  std::vector<ClickRecord> merged() const;
};

struct DetectionOptions {
  unsigned threads = 0;
  std::size_t block_photons = 1u << 16;
};

/// Routes each photon to either output with probability 1/2, detects it
/// with the counter's efficiency, adds Gaussian jitter, merges dark counts
/// and finally drops clicks falling inside the dead time of the previous
/// registered click on the same counter.
ClickStreams beamsplit_and_detect(const source::EmissionStream& stream, const DetectorModel& det1,
                                  const DetectorModel& det2, std::uint64_t seed,
                                  const DetectionOptions& options = {});

enum class Correlator {
  /// Start on detector 1, first detector-2 stop within the range, re-arm on
  /// the next start. Negative delays via the delayed-start convention.
  Tac,
  /// Every detector-1/detector-2 pair within the range.
  AllPairs,
};

struct HistogramSpec {
  double bin_width_ns = 0.05;
  /// Histogram covers tau in [-range, +range).
  double range_ns = 65.0;
  Correlator correlator = Correlator::Tac;

  std::size_t bins() const;
};

void validate(const HistogramSpec& spec);

struct CorrelationHistogram {
  double bin_width_ns = 0.05;
  double range_ns = 65.0;
  std::vector<std::uint64_t> counts;

  static CorrelationHistogram empty(const HistogramSpec& spec);

  std::uint64_t total() const;
  double bin_lo(std::size_t i) const { return -range_ns + static_cast<double>(i) * bin_width_ns; }
  double bin_hi(std::size_t i) const { return bin_lo(i + 1); }
  double bin_center(std::size_t i) const { return bin_lo(i) + 0.5 * bin_width_ns; }
  /// Bin holding tau, consistent with bin_lo/bin_hi; nullopt outside the range.
  std::optional<std::size_t> bin_of(double tau_ns) const;

  CorrelationHistogram& operator+=(const CorrelationHistogram& other);
};

/// Delay histogram of tau = t2 - t1. Click streams must be time-ordered.
CorrelationHistogram correlate(std::span<const double> clicks1, std::span<const double> clicks2,
                               const HistogramSpec& spec);

struct StreakSpec {
  /// 25 ps time resolution.
  double bin_width_ns = 0.025;
  double period_ns = source::kDefaultPeriodNs;
  /// Histogram spans [start, start + period); a short pre-trigger keeps the
  /// rising edge in view.
  double start_ns = -0.5;

  std::size_t bins() const;
};

struct StreakHistogram {
  double bin_width_ns = 0.025;
  double start_ns = -0.5;
  double period_ns = source::kDefaultPeriodNs;
  std::vector<std::uint64_t> counts;

  double bin_center(std::size_t i) const {
    return start_ns + (static_cast<double>(i) + 0.5) * bin_width_ns;
  }
  std::uint64_t total() const;
};

/// Emission times folded modulo the period, blurred by a Gaussian
/// instrument response of the given FWHM, then binned. The incomplete last
/// bin of the period is dropped.
StreakHistogram streak(const source::EmissionStream& stream, double irf_fwhm_ns, const StreakSpec& spec,
                       std::uint64_t seed, unsigned threads = 0);

}  // namespace spsim::hbt
