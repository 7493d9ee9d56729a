#include <doctest.h>

#include "spsim/error.hpp"
#include "spsim/hbt.hpp"
#include "stats_helpers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace spsim;
using namespace spsim::hbt;

namespace {

constexpr double kT = source::kDefaultPeriodNs;

// One photon exactly at every epoch.
source::EmissionStream regular_stream(std::uint64_t pulses) {
  source::EmissionStream s;
  s.train = {kT, pulses};
  for (std::uint64_t p = 0; p < pulses; ++p) s.photons.push_back({p, p * kT});
  return s;
}

DetectorModel ideal() { return {1.0, 0.0, 0.0, 0.0}; }

double sum_range(const CorrelationHistogram& h, double lo, double hi) {
  double s = 0.0;
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    if (h.bin_center(i) >= lo && h.bin_center(i) < hi) s += static_cast<double>(h.counts[i]);
  return s;
}

}  // namespace

TEST_CASE("detector model") {
  DetectorModel d;
  CHECK(d.jitter_fwhm_ns == 0.3);
  CHECK(d.dead_time_ns == 50.0);
  CHECK(d.jitter_sigma_ns() == doctest::Approx(0.3 / 2.35482).epsilon(1e-5));
  d.efficiency = 1.5;
  CHECK_THROWS_AS(validate(d), Error);
  d = {};
  d.dead_time_ns = -1.0;
  CHECK_THROWS_AS(validate(d), Error);
}

TEST_CASE("beamsplitter and counters") {
  const auto s = regular_stream(1'000'000);
  SUBCASE("zero efficiency") {
    DetectorModel blind = ideal();
    blind.efficiency = 0.0;
    const auto c = beamsplit_and_detect(s, blind, blind, 1);
    CHECK(c.detector1.empty());
    CHECK(c.detector2.empty());
  }
  SUBCASE("fair splitting") {
    const auto c = beamsplit_and_detect(s, ideal(), ideal(), 2);
    const double n = static_cast<double>(s.photons.size());
    CHECK(c.detector1.size() + c.detector2.size() == s.photons.size());
    CHECK(std::abs(c.detector1.size() - 0.5 * n) < 3.0 * std::sqrt(0.25 * n));
  }
  SUBCASE("efficiency") {
    DetectorModel d = ideal();
    d.efficiency = 0.3;
    const auto c = beamsplit_and_detect(s, d, d, 3);
    const double n = static_cast<double>(s.photons.size());
    const double got = static_cast<double>(c.detector1.size() + c.detector2.size());
    CHECK(std::abs(got - 0.3 * n) < 3.0 * std::sqrt(n * 0.3 * 0.7));
  }
  SUBCASE("Gaussian jitter") {
    DetectorModel d = ideal();
    d.jitter_fwhm_ns = 0.3;
    const auto small = regular_stream(100000);
    const auto c = beamsplit_and_detect(small, d, d, 4);
    std::vector<double> r;
    for (const auto& v : {c.detector1, c.detector2})
      for (double t : v) r.push_back(t - std::round(t / kT) * kT);
    const auto m = stats::moments(r);
    CHECK(std::abs(m.mean) < 5.0 * std::sqrt(m.variance / r.size()));
    CHECK(std::sqrt(m.variance) == doctest::Approx(0.3 / kFwhmPerSigma).epsilon(0.01));
    CHECK(std::abs(m.skewness) < 0.05);
    CHECK(std::abs(m.kurtosis - 3.0) < 0.1);
  }
  SUBCASE("dead time") {
    DetectorModel d = ideal();
    d.dead_time_ns = 50.0;
    const auto c = beamsplit_and_detect(s, d, d, 5);
    for (const auto& v : {c.detector1, c.detector2}) {
      REQUIRE(v.size() > 1000);
      bool spaced = true;
      for (std::size_t i = 1; i < v.size(); ++i) spaced = spaced && v[i] - v[i - 1] >= 50.0;
      CHECK(spaced);
    }
  }
  SUBCASE("dark counts") {
    DetectorModel d = ideal();
    d.efficiency = 0.0;
    d.dark_rate_per_ns = 1e-3;
    const auto c = beamsplit_and_detect(s, d, d, 6);
    const double expected = 1e-3 * s.train.duration_ns();
    CHECK(std::abs(c.detector1.size() - expected) < 4.0 * std::sqrt(expected));
    CHECK(std::is_sorted(c.detector1.begin(), c.detector1.end()));
  }
  SUBCASE("merged view") {
    DetectorModel d = ideal();
    d.efficiency = 0.5;
    const auto small = regular_stream(1000);
    const auto m = beamsplit_and_detect(small, d, d, 7).merged();
    for (std::size_t i = 1; i < m.size(); ++i) CHECK(m[i].time_ns >= m[i - 1].time_ns);
  }
  SUBCASE("threads do not change the clicks") {
    DetectorModel d;
    d.efficiency = 0.4;
    const auto a = beamsplit_and_detect(s, d, d, 8, {1, 4096});
    const auto b = beamsplit_and_detect(s, d, d, 8, {4, 4096});
    CHECK(a.detector1 == b.detector1);
    CHECK(a.detector2 == b.detector2);
  }
}

TEST_CASE("histogram binning") {
  const auto h = CorrelationHistogram::empty({});
  CHECK(h.counts.size() == 2600);
  CHECK(h.bin_lo(0) == -65.0);
  CHECK(h.bin_hi(h.counts.size() - 1) == doctest::Approx(65.0));
  CHECK(*h.bin_of(0.0) == 1300);
  CHECK(*h.bin_of(-65.0) == 0);
  CHECK_FALSE(h.bin_of(65.0).has_value());
  CHECK_FALSE(h.bin_of(-65.0001).has_value());
  auto rng = rng::make_engine(1, rng::Stream::Test);
  std::uniform_real_distribution<double> u(-65.0, 65.0);
  for (int i = 0; i < 100000; ++i) {
    const double tau = u(rng);
    const auto b = h.bin_of(tau);
    REQUIRE(b.has_value());
    CHECK(h.bin_lo(*b) <= tau);
    CHECK(tau < h.bin_hi(*b));
  }
  CHECK_THROWS_AS(CorrelationHistogram::empty({0.07, 65.0}), Error);
  CHECK_THROWS_AS(CorrelationHistogram::empty({0.0, 65.0}), Error);
}

TEST_CASE("correlator semantics") {
  SUBCASE("single pair") {
    const std::vector<double> a{0.0}, b{13.0};
    const auto h = correlate(a, b, {});
    CHECK(h.total() == 1);
    CHECK(h.counts[*h.bin_of(13.0)] == 1);
  }
  SUBCASE("negative delays via delayed start") {
    const std::vector<double> a{10.0}, b{3.0};
    const auto h = correlate(a, b, {});
    CHECK(h.counts[*h.bin_of(-7.0)] == 1);
  }
  SUBCASE("first stop only versus all pairs") {
    const std::vector<double> a{0.0}, b{5.0, 13.0, 100.0};
    const auto tac = correlate(a, b, {});
    CHECK(tac.total() == 1);
    CHECK(tac.counts[*tac.bin_of(5.0)] == 1);
    const auto all = correlate(a, b, {0.05, 65.0, Correlator::AllPairs});
    CHECK(all.total() == 2);
    CHECK(all.counts[*all.bin_of(13.0)] == 1);
  }
  SUBCASE("stops outside the range are ignored") {
    const std::vector<double> a{0.0}, b{-80.0, 70.0};
    CHECK(correlate(a, b, {}).total() == 0);
  }
  SUBCASE("TAC records at most one stop per start") {
    auto rng = rng::make_engine(2, rng::Stream::Test);
    std::uniform_real_distribution<double> u(0.0, 1e5);
    std::vector<double> a(5000), b(8000);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const auto tac = correlate(a, b, {});
    const auto all = correlate(a, b, {0.05, 65.0, Correlator::AllPairs});
    CHECK(tac.total() <= a.size());
    CHECK(tac.total() <= all.total());
  }
  SUBCASE("histograms merge additively") {
    const std::vector<double> a{0.0}, b{13.0};
    auto h = correlate(a, b, {});
    h += correlate(a, b, {});
    CHECK(h.total() == 2);
    auto other = CorrelationHistogram::empty({0.1, 65.0});
    CHECK_THROWS_AS(h += other, Error);
  }
}

TEST_CASE("single-photon stream leaves the central peak empty") {
  source::EmissionModel em;
  em.p1 = 0.9;
  em.p2 = 0.0;
  const auto s = source::run_source({kT, 300000}, {}, em, 31);
  DetectorModel d;
  d.dead_time_ns = 0.0;
  const auto c = beamsplit_and_detect(s, d, d, 32);
  for (auto corr : {Correlator::Tac, Correlator::AllPairs}) {
    const auto h = correlate(c.detector1, c.detector2, {0.05, 65.0, corr});
    CHECK(h.total() > 10000);
    CHECK(sum_range(h, -kT + 3.0, kT - 3.0) == 0.0);
  }
}

TEST_CASE("coherent light: flat side peaks") {
  source::EmissionModel em;
  em.statistics = source::PhotonStatistics::Poissonian;
  em.poisson_mean = 0.8;
  const auto s = source::run_source({kT, 1'000'000}, source::BlinkingModel::disabled(), em, 41);
  DetectorModel d;
  d.efficiency = 0.25;
  d.dead_time_ns = 0.0;
  const auto c = beamsplit_and_detect(s, d, d, 42);
  const auto h = correlate(c.detector1, c.detector2, {0.05, 65.0, Correlator::AllPairs});
  std::vector<double> areas;
  for (int k = -4; k <= 4; ++k) areas.push_back(sum_range(h, k * kT - 0.5 * kT, k * kT + 0.5 * kT));
  const double mean_side = (std::accumulate(areas.begin(), areas.end(), 0.0) - areas[4]) / 8.0;
  for (int i = 0; i < 9; ++i) {
    if (i == 4) continue;
    CHECK(std::abs(areas[i] - mean_side) < 3.0 * std::sqrt(mean_side));
  }
  // Coherent light: the zero-delay peak matches the side peaks.
  CHECK(std::abs(areas[4] - mean_side) < 3.0 * std::sqrt(mean_side));
}

TEST_CASE("side peak shape") {
  source::EmissionModel em;
  em.p1 = 1.0;
  const auto s = source::run_source({kT, 400000}, source::BlinkingModel::disabled(), em, 51);
  DetectorModel d;
  d.dead_time_ns = 0.0;
  const auto c = beamsplit_and_detect(s, d, d, 52);
  const auto h = correlate(c.detector1, c.detector2, {0.05, 65.0, Correlator::AllPairs});

  // tau = (e2 + j2) - (e1 + j1) + T: variance 2 sigma^2 + 2 / gamma^2.
  double w = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double x = h.bin_center(i) - kT;
    if (std::abs(x) >= 0.5 * kT) continue;
    const double n = static_cast<double>(h.counts[i]);
    w += n;
    m1 += n * x;
    m2 += n * x * x;
  }
  const double var = m2 / w - (m1 / w) * (m1 / w) - 0.05 * 0.05 / 12.0;
  const double sigma = d.jitter_sigma_ns();
  CHECK(std::sqrt(var) == doctest::Approx(std::sqrt(2.0 * sigma * sigma + 2.0 / (em.gamma * em.gamma))).epsilon(0.05));

  // Peak maxima sit at k T within a bin (5-bin smoothing tames the noise).
  for (int k : {-3, -1, 1, 2, 4}) {
    double best = -1.0, at = 0.0;
    for (std::size_t i = 2; i + 2 < h.counts.size(); ++i) {
      if (std::abs(h.bin_center(i) - k * kT) > 2.0) continue;
      double v = 0.0;
      for (int o = -2; o <= 2; ++o) v += static_cast<double>(h.counts[i + o]);
      if (v > best) {
        best = v;
        at = h.bin_center(i);
      }
    }
    CHECK(std::abs(at - k * kT) <= 0.05 + 1e-9);
  }
}

TEST_CASE("streak histogram") {
  SUBCASE("layout") {
    const StreakSpec spec;
    CHECK(spec.bins() == static_cast<std::size_t>(std::floor(kT / 0.025)));
    const auto s = regular_stream(10);
    const auto h = streak(s, 0.0, spec, 1);
    CHECK(h.total() == 10);
    CHECK(h.bin_center(0) == doctest::Approx(-0.5 + 0.0125));
    StreakSpec wrong;
    wrong.period_ns = 12.0;
    CHECK_THROWS_AS(streak(s, 0.0, wrong, 1), Error);
  }
  SUBCASE("prompt emission images the instrument response") {
    StreakSpec fine;
    fine.bin_width_ns = 0.001;
    const auto s = regular_stream(200000);
    const auto h = streak(s, 0.025, fine, 2);
    double w = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const double n = static_cast<double>(h.counts[i]), x = h.bin_center(i);
      w += n;
      m1 += n * x;
      m2 += n * x * x;
    }
    CHECK(w == 200000.0);
    const double sd = std::sqrt(m2 / w - (m1 / w) * (m1 / w) - 1e-6 / 12.0);
    CHECK(sd * kFwhmPerSigma == doctest::Approx(0.025).epsilon(0.02));
  }
  SUBCASE("tail slope recovers the lifetime") {
    source::EmissionModel em;
    em.p1 = 1.0;
    const auto s = source::run_source({kT, 1'000'000}, source::BlinkingModel::disabled(), em, 61);
    const auto h = streak(s, 0.0, {}, 3);
    // Log-linear fit over 0.1 .. 1.2 ns.
    std::vector<double> t, y;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const double x = h.bin_center(i);
      if (x > 0.1 && x < 1.2 && h.counts[i] > 0) {
        t.push_back(x);
        y.push_back(std::log(static_cast<double>(h.counts[i])));
      }
    }
    CHECK(-1.0 / stats::slope(t, y) == doctest::Approx(0.2).epsilon(0.02));
  }
  SUBCASE("threads do not change the histogram") {
    source::EmissionModel em;
    const auto s = source::run_source({kT, 300000}, {}, em, 71);
    CHECK(streak(s, 0.025, {}, 9, 1).counts == streak(s, 0.025, {}, 9, 4).counts);
  }
}

TEST_CASE("spectral filter") {
  SpectralFilter f;
  CHECK(f.passes(870.0));
  f.enabled = true;
  f.center_nm = 880.0;
  CHECK(f.passes(880.04));
  CHECK_FALSE(f.passes(880.06));
}
