#include "spsim/hbt.hpp"

#include "spsim/error.hpp"
#include "spsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace spsim::hbt {

void validate(const DetectorModel& d) {
  require(d.efficiency >= 0.0 && d.efficiency <= 1.0, "detector efficiency must be in [0, 1]");
  require(d.jitter_fwhm_ns >= 0.0 && std::isfinite(d.jitter_fwhm_ns), "jitter FWHM must be >= 0");
  require(d.dead_time_ns >= 0.0 && std::isfinite(d.dead_time_ns), "dead time must be >= 0");
  require(d.dark_rate_per_ns >= 0.0 && std::isfinite(d.dark_rate_per_ns), "dark rate must be >= 0");
}

bool SpectralFilter::passes(double line_nm) const {
  return !enabled || std::abs(line_nm - center_nm) <= 0.5 * bandwidth_nm;
}

std::vector<ClickRecord> ClickStreams::merged() const {
  std::vector<ClickRecord> out;
  out.reserve(detector1.size() + detector2.size());
  std::size_t i = 0, j = 0;
  while (i < detector1.size() || j < detector2.size()) {
    if (j == detector2.size() || (i < detector1.size() && detector1[i] <= detector2[j])) {
      out.push_back({1, detector1[i++]});
    } else {
      out.push_back({2, detector2[j++]});
    }
  }
  return out;
}

namespace {

void apply_dead_time(std::vector<double>& clicks, double dead_time) {
  std::sort(clicks.begin(), clicks.end());
  if (dead_time <= 0.0 || clicks.empty()) return;
  std::size_t kept = 1;
  double last = clicks.front();
  for (std::size_t i = 1; i < clicks.size(); ++i) {
    if (clicks[i] - last >= dead_time) {
      clicks[kept++] = clicks[i];
      last = clicks[i];
    }
  }
  clicks.resize(kept);
}

void add_dark_counts(std::vector<double>& clicks, double rate, double duration, rng::Engine& rng) {
  if (rate <= 0.0 || duration <= 0.0) return;
  std::exponential_distribution<double> gap(rate);
  for (double t = gap(rng); t < duration; t += gap(rng)) clicks.push_back(t);
}

}  // namespace

ClickStreams beamsplit_and_detect(const source::EmissionStream& stream, const DetectorModel& det1,
                                  const DetectorModel& det2, std::uint64_t seed,
                                  const DetectionOptions& options) {
  validate(det1);
  validate(det2);
  require(options.block_photons >= 1, "block size must be >= 1");
  const auto& photons = stream.photons;
  const std::size_t n_blocks = (photons.size() + options.block_photons - 1) / options.block_photons;
  std::vector<ClickStreams> blocks(n_blocks);
  const double sigma1 = det1.jitter_sigma_ns(), sigma2 = det2.jitter_sigma_ns();

  parallel_for_blocks(n_blocks, options.threads, [&](std::size_t b) {
    auto rng = rng::make_engine(seed, rng::Stream::Detection, b);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t first = b * options.block_photons;
    const std::size_t last = std::min(photons.size(), first + options.block_photons);
    auto& out = blocks[b];
    for (std::size_t i = first; i < last; ++i) {
      const bool to_first = uniform(rng) < 0.5;
      const double detect = uniform(rng);
      const double z = normal(rng);
      const DetectorModel& det = to_first ? det1 : det2;
      if (detect >= det.efficiency) continue;
      const double t = photons[i].time_ns + z * (to_first ? sigma1 : sigma2);
      (to_first ? out.detector1 : out.detector2).push_back(t);
    }
  });

  ClickStreams clicks;
  for (auto& b : blocks) {
    clicks.detector1.insert(clicks.detector1.end(), b.detector1.begin(), b.detector1.end());
    clicks.detector2.insert(clicks.detector2.end(), b.detector2.begin(), b.detector2.end());
  }
  const double duration = stream.train.duration_ns();
  {
    auto rng = rng::make_engine(seed, rng::Stream::DarkCounts, 1);
    add_dark_counts(clicks.detector1, det1.dark_rate_per_ns, duration, rng);
  }
  {
    auto rng = rng::make_engine(seed, rng::Stream::DarkCounts, 2);
    add_dark_counts(clicks.detector2, det2.dark_rate_per_ns, duration, rng);
  }
  apply_dead_time(clicks.detector1, det1.dead_time_ns);
  apply_dead_time(clicks.detector2, det2.dead_time_ns);
  return clicks;
}

std::size_t HistogramSpec::bins() const {
  return static_cast<std::size_t>(std::llround(2.0 * range_ns / bin_width_ns));
}

void validate(const HistogramSpec& spec) {
  require(spec.bin_width_ns > 0.0 && spec.range_ns > 0.0, "histogram bin width and range must be > 0");
  const double ratio = 2.0 * spec.range_ns / spec.bin_width_ns;
  require(std::abs(ratio - std::round(ratio)) < 1e-6 * ratio,
          "histogram span must be a whole number of bins");
}

CorrelationHistogram CorrelationHistogram::empty(const HistogramSpec& spec) {
  validate(spec);
  CorrelationHistogram h;
  h.bin_width_ns = spec.bin_width_ns;
  h.range_ns = spec.range_ns;
  h.counts.assign(spec.bins(), 0);
  return h;
}

std::uint64_t CorrelationHistogram::total() const {
  std::uint64_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

std::optional<std::size_t> CorrelationHistogram::bin_of(double tau) const {
  const auto n = static_cast<std::ptrdiff_t>(counts.size());
  const double x = std::floor((tau + range_ns) / bin_width_ns);
  if (!(x >= -1.0 && x <= static_cast<double>(n))) return std::nullopt;
  auto lo = [&](std::ptrdiff_t k) { return -range_ns + static_cast<double>(k) * bin_width_ns; };
  auto i = static_cast<std::ptrdiff_t>(x);
  // Keep the division consistent with the edge arithmetic of bin_lo().
  if (tau < lo(i))
    --i;
  else if (tau >= lo(i + 1))
    ++i;
  if (i < 0 || i >= n) return std::nullopt;
  return static_cast<std::size_t>(i);
}

CorrelationHistogram& CorrelationHistogram::operator+=(const CorrelationHistogram& other) {
  require(other.counts.size() == counts.size() && other.bin_width_ns == bin_width_ns &&
              other.range_ns == range_ns,
          "histograms must share binning to be merged");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  return *this;
}

CorrelationHistogram correlate(std::span<const double> c1, std::span<const double> c2,
                               const HistogramSpec& spec) {
  auto h = CorrelationHistogram::empty(spec);
  const double range = spec.range_ns;
  std::size_t j = 0;
  for (const double t1 : c1) {
    while (j < c2.size() && c2[j] < t1 - range) ++j;
    if (spec.correlator == Correlator::Tac) {
      if (j < c2.size()) {
        if (auto bin = h.bin_of(c2[j] - t1)) ++h.counts[*bin];
      }
    } else {
      for (std::size_t k = j; k < c2.size() && c2[k] < t1 + range; ++k) {
        if (auto bin = h.bin_of(c2[k] - t1)) ++h.counts[*bin];
      }
    }
  }
  return h;
}

std::size_t StreakSpec::bins() const {
  return static_cast<std::size_t>(std::floor(period_ns / bin_width_ns + 1e-9));
}

std::uint64_t StreakHistogram::total() const {
  std::uint64_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

StreakHistogram streak(const source::EmissionStream& stream, double irf_fwhm_ns, const StreakSpec& spec,
                       std::uint64_t seed, unsigned threads) {
  require(irf_fwhm_ns >= 0.0, "IRF FWHM must be >= 0");
  require(spec.bin_width_ns > 0.0 && spec.period_ns > spec.bin_width_ns, "invalid streak binning");
  require(std::abs(spec.period_ns - stream.train.period_ns) <= 1e-9 * stream.train.period_ns,
          "streak period must match the pulse train");
  StreakHistogram out;
  out.bin_width_ns = spec.bin_width_ns;
  out.start_ns = spec.start_ns;
  out.period_ns = spec.period_ns;
  const std::size_t nbins = spec.bins();
  out.counts.assign(nbins, 0);

  const double sigma = irf_fwhm_ns / kFwhmPerSigma;
  const auto& photons = stream.photons;
  constexpr std::size_t kBlock = 1u << 16;
  const std::size_t n_blocks = (photons.size() + kBlock - 1) / kBlock;
  std::vector<std::vector<std::uint64_t>> partial(n_blocks);
  parallel_for_blocks(n_blocks, threads, [&](std::size_t b) {
    auto rng = rng::make_engine(seed, rng::Stream::Streak, b);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto& counts = partial[b];
    counts.assign(nbins, 0);
    const std::size_t last = std::min(photons.size(), (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < last; ++i) {
      // Delay from the photon's own pulse epoch; exact even late in long runs.
      double x = photons[i].time_ns - static_cast<double>(photons[i].pulse_index) * spec.period_ns;
      if (sigma > 0.0) x += sigma * normal(rng);
      // Wrap into [start, start + period).
      x = spec.start_ns + std::fmod(std::fmod(x - spec.start_ns, spec.period_ns) + spec.period_ns, spec.period_ns);
      const auto bin = static_cast<std::size_t>((x - spec.start_ns) / spec.bin_width_ns);
      if (bin < nbins) ++counts[bin];
    }
  });
  for (const auto& p : partial)
    for (std::size_t i = 0; i < nbins; ++i) out.counts[i] += p[i];
  return out;
}

}  // namespace spsim::hbt
