#include "spsim/photon_source.hpp"

#include "spsim/error.hpp"
#include "spsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace spsim::source {

double BlinkingModel::on_fraction() const {
  if (is_disabled()) return initial == InitialState::Off ? 0.0 : 1.0;
  return k_on / (k_on + k_off);
}

double EmissionModel::mean_photons() const {
  return statistics == PhotonStatistics::Poissonian ? poisson_mean : p1 + 2.0 * p2;
}

void validate(const PulseTrain& train) {
  require(train.period_ns > 0.0 && std::isfinite(train.period_ns), "pulse period must be > 0");
  require(train.n_pulses >= 1, "need at least one pulse");
}

void validate(const BlinkingModel& m) {
  require(m.k_on >= 0.0 && m.k_off >= 0.0 && std::isfinite(m.k_on) && std::isfinite(m.k_off),
          "blinking rates must be >= 0");
  require(!(m.is_disabled() && m.initial == InitialState::Stationary),
          "stationary initial state needs a non-zero blinking rate");
}

void validate(const EmissionModel& m) {
  require(m.gamma > 0.0 && std::isfinite(m.gamma), "emission rate gamma must be > 0");
  require(m.background_rate_per_ns >= 0.0, "background rate must be >= 0");
  if (m.statistics == PhotonStatistics::Truncated) {
    require(m.p1 >= 0.0 && m.p2 >= 0.0 && m.p1 + m.p2 <= 1.0 + 1e-15,
            "photon-number probabilities must satisfy p1, p2 >= 0 and p1 + p2 <= 1");
  } else {
    require(m.poisson_mean >= 0.0 && std::isfinite(m.poisson_mean), "Poisson mean must be >= 0");
  }
}

bool BlinkTrajectory::state_at(double t) const {
  require(!intervals.empty(), "empty blinking trajectory");
  auto it = std::upper_bound(intervals.begin(), intervals.end(), t,
                             [](double v, const BlinkInterval& iv) { return v < iv.end_ns; });
  if (it == intervals.end()) return intervals.back().on;
  return it->on;
}

double BlinkTrajectory::on_time_ns() const {
  double sum = 0.0;
  for (const auto& iv : intervals)
    if (iv.on) sum += iv.end_ns - iv.start_ns;
  return sum;
}

BlinkTrajectory simulate_blinking(const BlinkingModel& model, double duration_ns, rng::Engine& rng) {
  validate(model);
  require(duration_ns > 0.0 && std::isfinite(duration_ns), "blinking duration must be > 0");
  bool on = true;
  switch (model.initial) {
    case InitialState::On: on = true; break;
    case InitialState::Off: on = false; break;
    case InitialState::Stationary: on = std::bernoulli_distribution(model.on_fraction())(rng); break;
  }
  BlinkTrajectory traj;
  double t = 0.0;
  while (t < duration_ns) {
    const double rate = on ? model.k_off : model.k_on;
    double hold = std::numeric_limits<double>::infinity();
    if (rate > 0.0) hold = std::exponential_distribution<double>(rate)(rng);
    const double end = std::min(duration_ns, t + hold);
    traj.intervals.push_back({t, end, on});
    t = end;
    on = !on;
  }
  return traj;
}

namespace {

void emit_into(bool is_on, const EmissionModel& m, std::uint64_t pulse, double epoch, rng::Engine& rng,
               std::vector<Photon>& out) {
  if (!is_on) return;
  int n = 0;
  if (m.statistics == PhotonStatistics::Truncated) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    n = u < m.p1 ? 1 : (u < m.p1 + m.p2 ? 2 : 0);
  } else if (m.poisson_mean > 0.0) {
    n = std::poisson_distribution<int>(m.poisson_mean)(rng);
  }
  if (n == 0) return;
  std::exponential_distribution<double> delay(m.gamma);
  const std::size_t first = out.size();
  for (int k = 0; k < n; ++k) out.push_back({pulse, epoch + delay(rng)});
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
            [](const Photon& a, const Photon& b) { return a.time_ns < b.time_ns; });
}

}  // namespace

EmissionEvent sample_pulse_emission(bool is_on, const EmissionModel& model, std::uint64_t pulse_index,
                                    double pulse_epoch_ns, rng::Engine& rng) {
  validate(model);
  std::vector<Photon> photons;
  emit_into(is_on, model, pulse_index, pulse_epoch_ns, rng, photons);
  EmissionEvent ev;
  ev.pulse_index = pulse_index;
  for (const auto& p : photons) ev.times_ns.push_back(p.time_ns);
  return ev;
}

std::vector<EmissionEvent> EmissionStream::events() const {
  std::vector<Photon> sorted = photons;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Photon& a, const Photon& b) { return a.pulse_index < b.pulse_index; });
  std::vector<EmissionEvent> out;
  for (const auto& p : sorted) {
    if (out.empty() || out.back().pulse_index != p.pulse_index) out.push_back({p.pulse_index, {}});
    out.back().times_ns.push_back(p.time_ns);
  }
  for (auto& e : out) std::sort(e.times_ns.begin(), e.times_ns.end());
  return out;
}

EmissionStream run_source(const PulseTrain& train, const BlinkingModel& blinking,
                          const EmissionModel& emission, std::uint64_t seed,
                          const SourceRunOptions& options) {
  validate(train);
  validate(blinking);
  validate(emission);
  require(options.block_pulses >= 1, "block size must be >= 1");

  BlinkTrajectory trajectory;
  const bool always_on = blinking.is_disabled() && blinking.initial != InitialState::Off;
  const bool always_off = blinking.is_disabled() && blinking.initial == InitialState::Off;
  if (!blinking.is_disabled()) {
    auto rng = rng::make_engine(seed, rng::Stream::Blinking);
    trajectory = simulate_blinking(blinking, train.duration_ns(), rng);
  }

  const std::uint64_t n_blocks = (train.n_pulses + options.block_pulses - 1) / options.block_pulses;
  std::vector<std::vector<Photon>> blocks(n_blocks);
  parallel_for_blocks(n_blocks, options.threads, [&](std::size_t b) {
    auto rng = rng::make_engine(seed, rng::Stream::Emission, b);
    const std::uint64_t first = b * options.block_pulses;
    const std::uint64_t last = std::min(train.n_pulses, first + options.block_pulses);
    auto& out = blocks[b];
    out.reserve(static_cast<std::size_t>((last - first) * std::max(1.0, emission.mean_photons())));
    std::size_t iv = 0;
    if (!trajectory.intervals.empty()) {
      const double t0 = static_cast<double>(first) * train.period_ns;
      auto it = std::upper_bound(trajectory.intervals.begin(), trajectory.intervals.end(), t0,
                                 [](double v, const BlinkInterval& x) { return v < x.end_ns; });
      iv = static_cast<std::size_t>(it - trajectory.intervals.begin());
    }
    for (std::uint64_t p = first; p < last; ++p) {
      const double epoch = static_cast<double>(p) * train.period_ns;
      bool on = always_on;
      if (!always_on && !always_off) {
        while (iv + 1 < trajectory.intervals.size() && trajectory.intervals[iv].end_ns <= epoch) ++iv;
        on = trajectory.intervals[iv].on;
      }
      emit_into(on, emission, p, epoch, rng, out);
    }
  });

  EmissionStream stream;
  stream.train = train;
  std::size_t total = 0;
  for (const auto& b : blocks) total += b.size();
  stream.photons.reserve(total);
  for (auto& b : blocks) {
    stream.photons.insert(stream.photons.end(), b.begin(), b.end());
    std::vector<Photon>().swap(b);
  }

  if (emission.background_rate_per_ns > 0.0) {
    auto rng = rng::make_engine(seed, rng::Stream::Background);
    const double duration = train.duration_ns();
    std::exponential_distribution<double> gap(emission.background_rate_per_ns);
    for (double t = gap(rng); t < duration; t += gap(rng)) {
      const auto pulse = static_cast<std::uint64_t>(t / train.period_ns);
      stream.photons.push_back({std::min(pulse, train.n_pulses - 1), t});
    }
  }

  const auto by_time = [](const Photon& a, const Photon& b) { return a.time_ns < b.time_ns; };
  if (!std::is_sorted(stream.photons.begin(), stream.photons.end(), by_time))
    std::stable_sort(stream.photons.begin(), stream.photons.end(), by_time);
  return stream;
}

}  // namespace spsim::source
