#include <doctest.h>

#include "spsim/cavity_optics.hpp"
#include "spsim/error.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace spsim;
using namespace spsim::optics;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent oracle: Airy/Rouard recursion for the amplitude reflection,
// built from the substrate upwards with Fresnel interface coefficients.
std::complex<double> rouard_r(const LayerStack& s, double lambda) {
  auto fresnel = [](double a, double b) { return (a - b) / (a + b); };
  double below = s.substrate_index;
  std::complex<double> r = 0.0;
  for (auto it = s.layers.rbegin(); it != s.layers.rend(); ++it) {
    const double n = it->index;
    const std::complex<double> r_int = fresnel(n, below);
    // Reflection seen from inside layer n looking down, propagated to its top.
    const std::complex<double> rr = (r_int + r) / (1.0 + r_int * r);
    const double delta = 2.0 * kPi * n * it->thickness_nm / lambda;
    r = rr * std::exp(std::complex<double>(0.0, -2.0 * delta));
    below = n;
  }
  const std::complex<double> r_top = fresnel(s.ambient_index, below);
  return (r_top + r) / (1.0 + r_top * r);
}

LayerStack reference_stack() { return build_micropost_stack({}); }

ReflectanceSpectrum lorentzian_dip(double center, double fwhm, int samples) {
  ReflectanceSpectrum s;
  for (int i = 0; i < samples; ++i) {
    const double l = 850.0 + 200.0 * i / (samples - 1);
    double r = (l > 900.0 && l < 1020.0) ? 0.99 : 0.3;
    const double x = 2.0 * (l - center) / fwhm;
    r -= 0.5 / (1.0 + x * x);
    s.wavelength_nm.push_back(l);
    s.reflectance.push_back(r);
  }
  return s;
}

}  // namespace

TEST_CASE("micropost stack layout") {
  const auto s = reference_stack();
  CHECK(s.layers.size() == 85);
  CHECK(s.ambient_index == 1.0);
  CHECK(s.substrate_index == 3.5);
  CHECK(s.layers.front().index == 3.5);
  CHECK(s.layers.front().thickness_nm == doctest::Approx(68.6));
  CHECK(s.layers[24].thickness_nm == doctest::Approx(274.0));
  CHECK(s.layers[25].index == 2.9);
  CHECK(s.layers.back().index == 3.5);

  MicropostRecipe bare;
  bare.top_pairs = bare.bottom_pairs = 0;
  const auto spacer = build_micropost_stack(bare);
  REQUIRE(spacer.layers.size() == 1);
  CHECK(spacer.layers[0].thickness_nm == 274.0);

  MicropostRecipe capped;
  capped.cap = Layer{500.0, kSapphireIndex, "sapphire"};
  const auto c = build_micropost_stack(capped);
  REQUIRE(c.layers.size() == 86);
  CHECK(c.layers[0].index == 1.75);
  for (std::size_t i = 0; i < s.layers.size(); ++i) CHECK(c.layers[i + 1].thickness_nm == s.layers[i].thickness_nm);
}

TEST_CASE("micropost recipe validation") {
  MicropostRecipe r;
  r.gaas_nm = 0.0;
  CHECK_THROWS_AS(build_micropost_stack(r), Error);
  r = {};
  r.n_alas = 0.9;
  CHECK_THROWS_AS(build_micropost_stack(r), Error);
  r = {};
  r.top_pairs = -1;
  CHECK_THROWS_AS(build_micropost_stack(r), Error);
}

TEST_CASE("layer matrix closed forms") {
  const auto id = layer_matrix({0.0, 3.5, ""}, 900.0);
  CHECK(std::abs(id(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(id(0, 1)) < 1e-15);
  CHECK(std::abs(id(1, 0)) < 1e-15);

  // 4 n d = lambda makes the layer quarter-wave.
  const double lambda = 4.0 * 3.5 * 68.6;
  CHECK(lambda == doctest::Approx(960.4));
  const auto q = layer_matrix({68.6, 3.5, ""}, lambda);
  CHECK(std::abs(q(0, 0)) < 1e-12);
  CHECK(std::abs(q(1, 1)) < 1e-12);
  CHECK(std::abs(q(0, 1) - std::complex<double>(0.0, 1.0 / 3.5)) < 1e-12);
  CHECK(std::abs(q(1, 0) - std::complex<double>(0.0, 3.5)) < 1e-12);

  CHECK_THROWS_AS(layer_matrix({10.0, 2.0, ""}, 0.0), Error);
}

TEST_CASE("property: unit determinant") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> t(0.0, 2000.0), n(1.0, 4.0), l(300.0, 2000.0);
  for (int i = 0; i < 2000; ++i) {
    const auto m = layer_matrix({t(rng), n(rng), ""}, l(rng));
    CHECK(std::abs(m.determinant() - 1.0) < 1e-12);
  }
}

TEST_CASE("reflectance of bare interfaces") {
  LayerStack empty;
  CHECK(reflectance(empty, 900.0) == doctest::Approx(0.308642).epsilon(1e-6));
  empty.substrate_index = 1.0;
  CHECK(reflectance(empty, 900.0) == doctest::Approx(0.0));

  LayerStack matched;
  matched.ambient_index = matched.substrate_index = 3.5;
  matched.layers = {{100.0, 3.5, ""}, {250.0, 3.5, ""}};
  const auto flat = reflectance_spectrum(matched, 850.0, 1050.0, 101);
  for (double r : flat.reflectance) CHECK(r < 1e-20);
}

TEST_CASE("reference stack agrees with the recursion oracle") {
  const auto s = reference_stack();
  const double r940 = std::norm(rouard_r(s, 940.0));
  CHECK(r940 > 0.99);
  CHECK(reflectance(s, 940.0) == doctest::Approx(r940).epsilon(1e-10));
  for (double l : {860.0, 900.0, 953.0, 953.75, 1000.0, 1040.0})
    CHECK(std::abs(reflection_coefficient(s, l) - rouard_r(s, l)) < 1e-10);
}

TEST_CASE("property: energy bound") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> t(1.0, 400.0), n(1.0, 4.0), l(400.0, 1600.0);
  std::uniform_int_distribution<int> count(0, 30);
  for (int trial = 0; trial < 200; ++trial) {
    LayerStack s;
    s.ambient_index = n(rng);
    s.substrate_index = n(rng);
    const int k = count(rng);
    for (int i = 0; i < k; ++i) s.layers.push_back({t(rng), n(rng), ""});
    for (int j = 0; j < 20; ++j) {
      const double r = reflectance(s, l(rng));
      CHECK(r >= -1e-9);
      CHECK(r <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("property: reciprocity") {
  const auto s = reference_stack();
  const auto rev = s.reversed();
  CHECK(rev.ambient_index == s.substrate_index);
  CHECK(rev.substrate_index == s.ambient_index);
  for (double l = 860.0; l < 1050.0; l += 7.3)
    CHECK(std::abs(reflectance(s, l) - reflectance(rev, l)) < 1e-12);

  // Symmetric stack in a uniform medium: reversal is an identity.
  LayerStack sym;
  sym.ambient_index = sym.substrate_index = 1.0;
  sym.layers = {{68.6, 3.5, ""}, {81.4, 2.9, ""}, {274.0, 3.5, ""}, {81.4, 2.9, ""}, {68.6, 3.5, ""}};
  for (double l = 860.0; l < 1050.0; l += 11.0)
    CHECK(std::abs(reflectance(sym, l) - reflectance(sym.reversed(), l)) < 1e-12);
}

TEST_CASE("property: DBR peak reflectance grows with pair count") {
  double previous = 0.0;
  for (int pairs = 0; pairs <= 20; ++pairs) {
    LayerStack s;
    for (int i = 0; i < pairs; ++i) {
      s.layers.push_back({68.6, 3.5, ""});
      s.layers.push_back({81.4, 2.9, ""});
    }
    const double r = reflectance(s, 960.4);
    CHECK(r >= previous - 1e-15);
    previous = r;
  }
  CHECK(previous > 0.99);
}

TEST_CASE("reflectance spectrum sampling") {
  const auto s = reference_stack();
  const auto spec = reflectance_spectrum(s, 850.0, 1050.0, 11);
  REQUIRE(spec.size() == 11);
  CHECK(spec.wavelength_nm.front() == 850.0);
  CHECK(spec.wavelength_nm.back() == 1050.0);
  for (std::size_t i = 1; i < spec.size(); ++i) CHECK(spec.wavelength_nm[i] > spec.wavelength_nm[i - 1]);
  CHECK_THROWS_AS(reflectance_spectrum(s, 850.0, 1050.0, 1), Error);
  CHECK_THROWS_AS(reflectance_spectrum(s, 1050.0, 850.0, 11), Error);
  CHECK_THROWS_AS(reflectance_spectrum(s, 0.0, 850.0, 11), Error);

  // The quarter-wave design wavelength sits inside the stopband.
  CHECK(reflectance(s, 960.4) > 0.99);
}

TEST_CASE("find_resonance on a constructed Lorentzian dip") {
  const auto r = find_resonance(lorentzian_dip(960.0, 0.24, 20001));
  CHECK(r.lambda_c_nm == doctest::Approx(960.0).epsilon(1e-5));
  CHECK(r.q_factor == doctest::Approx(4000.0).epsilon(0.01));
  CHECK(r.q_factor == doctest::Approx(r.lambda_c_nm / r.fwhm_nm));
  CHECK(r.stopband_lo_nm < r.lambda_c_nm);
  CHECK(r.stopband_hi_nm > r.lambda_c_nm);
}

TEST_CASE("find_resonance error paths") {
  ReflectanceSpectrum flat;
  for (int i = 0; i < 100; ++i) {
    flat.wavelength_nm.push_back(900.0 + i);
    flat.reflectance.push_back(0.3);
  }
  try {
    find_resonance(flat);
    FAIL("expected NoStopband");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoStopband);
  }

  ReflectanceSpectrum plateau = flat;
  for (int i = 20; i < 80; ++i) plateau.reflectance[i] = 0.99;
  try {
    find_resonance(plateau);
    FAIL("expected NoDip");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoDip);
  }

  // An empty stack reflects 31% everywhere: no stopband.
  CHECK_THROWS_AS(find_resonance(reflectance_spectrum(LayerStack{})), Error);
}

TEST_CASE("reference stack resonance") {
  const auto r = find_resonance(reflectance_spectrum(reference_stack()));
  CHECK(r.lambda_c_nm >= 940.0);
  CHECK(r.lambda_c_nm <= 980.0);
  CHECK(r.q_factor == doctest::Approx(4000.0).epsilon(0.25));
  CHECK(r.stopband_lo_nm < 940.0);
  CHECK(r.stopband_hi_nm > 980.0);
  // Frozen regression value for the default sampling.
  CHECK(r.q_factor == doctest::Approx(3393.4).epsilon(1e-3));
  CHECK(r.lambda_c_nm == doctest::Approx(953.748).epsilon(1e-5));

  SUBCASE("sample doubling leaves Q unchanged") {
    const auto fine = find_resonance(reflectance_spectrum(reference_stack(), 850.0, 1050.0, 40001));
    CHECK(std::abs(fine.q_factor - r.q_factor) / r.q_factor < 1e-3);
  }
  SUBCASE("a sapphire cap lowers Q") {
    MicropostRecipe capped;
    capped.cap = Layer{500.0, kSapphireIndex, "sapphire"};
    const auto c = find_resonance(reflectance_spectrum(build_micropost_stack(capped)));
    CHECK(c.q_factor < r.q_factor);
  }
}
