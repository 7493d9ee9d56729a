#include <doctest.h>

#include "config.hpp"
#include "pipeline.hpp"
#include "report.hpp"

#include "spsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

using namespace spsim;
using namespace spsim::app;

namespace {

template <class F>
std::string message_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("built-in presets validate") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const auto c = preset(name);
    CHECK(c.name == name);
    CHECK_NOTHROW(validate(c));
  }
  CHECK(kind_of([] { preset("nope"); }) == ErrorKind::Config);
  // The nominal emitter decays at the on-resonance rate.
  const auto n = preset("nominal_dot");
  CHECK(n.emission.gamma == doctest::Approx(n.decay.gamma_max));
}

TEST_CASE("YAML presets") {
  const char* yaml = R"(use: b
presets:
  a:
    base: nominal_dot
    emission: {p2: 0.01}
  b:
    base: a
    blinking: {enabled: false}
    seed: 9
  nominal_dot:
    base: nominal_dot
    histogram: {range_ns: 100}
)";
  SUBCASE("base chain and use") {
    const auto c = parse_config(yaml);
    CHECK(c.name == "b");
    CHECK(c.emission.p2 == 0.01);
    CHECK(c.blinking.is_disabled());
    REQUIRE(c.seed.has_value());
    CHECK(*c.seed == 9u);
    // `a` derives from the file's nominal_dot, which shadows the built-in.
    CHECK(c.histogram.range_ns == 100.0);
  }
  SUBCASE("explicit selection and built-in shadowing") {
    CHECK(parse_config(yaml, "a").blinking.k_on == preset("nominal_dot").blinking.k_on);
    const auto c = parse_config(yaml, "nominal_dot");
    CHECK(c.histogram.range_ns == 100.0);
    CHECK(c.emission.p2 == preset("nominal_dot").emission.p2);
  }
  SUBCASE("flat file") {
    const auto c = parse_config("base: paper_stack\nstack: {top_pairs: 10}\n");
    CHECK(c.stack.top_pairs == 10);
  }
  SUBCASE("gamma follows the decay model unless pinned") {
    const auto c = parse_config("base: nominal_dot\nemission: {detuning_nm: 0.3464}\n");
    CHECK(c.emission.gamma == doctest::Approx(purcell::decay_rate(880.0 + 0.3464, c.decay)));
    CHECK(c.emission.gamma < c.decay.gamma_max);
    CHECK(parse_config("base: nominal_dot\nemission: {gamma: 2.5}\n").emission.gamma == 2.5);
  }
}

TEST_CASE("config errors carry the line") {
  const auto unknown = message_of([] { parse_config("emission:\n  p2: 0.01\n  bogus: 1\n", {}, "x.yaml"); });
  CHECK(unknown.find("x.yaml:3") != std::string::npos);
  CHECK(unknown.find("bogus") != std::string::npos);
  const auto bad_value = message_of([] { parse_config("pulses:\n  count: many\n", {}, "y.yaml"); });
  CHECK(bad_value.find("y.yaml:2") != std::string::npos);
  CHECK(kind_of([] { parse_config("presets:\n  a: {base: b}\n  b: {base: a}\nuse: a\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("presets:\n  a: {base: missing}\n  b: {}\nuse: b\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("presets:\n  a: {}\n  b: {}\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("histogram: {correlator: magic}\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("key: [unclosed\n"); }) == ErrorKind::Config);
}

TEST_CASE("config hash") {
  auto a = preset("nominal_dot");
  auto b = a;
  b.seed = 42;
  b.output_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.emission.p2 += 1e-6;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(canonical_text(a) == canonical_text(parse_config("base: nominal_dot\n")));
}

TEST_CASE("default detunings") {
  const purcell::CavityMode mode{880.0, 1270.0};
  const auto d = default_detunings(mode);
  REQUIRE(d.size() == 8);
  CHECK(d.front() == 0.0);
  double lo = 0.0, hi = 0.0;
  for (double x : d) lo = std::min(lo, x), hi = std::max(hi, x);
  CHECK(hi == doctest::Approx(1.5 * mode.linewidth_nm()));
  CHECK(lo == doctest::Approx(-2.0 * mode.linewidth_nm()));
}

TEST_CASE("closed-form g2") {
  source::EmissionModel e;
  e.p1 = 0.2;
  const auto off = source::BlinkingModel::disabled();
  // 4 p2^2 - 1.2 p2 + 0.04 = 0, smaller root.
  const auto p2 = closed_form_p2(1.0, e, off);
  REQUIRE(p2.has_value());
  CHECK(*p2 == doctest::Approx((1.2 - std::sqrt(0.8)) / 8.0));
  e.p2 = *p2;
  CHECK(closed_form_g2(e, off) == doctest::Approx(1.0));

  // Blinking scales g2 by 1 / p_on.
  source::BlinkingModel b;
  e.p1 = 0.8;
  e.p2 = 0.005;
  CHECK(closed_form_g2(e, b) == doctest::Approx(closed_form_g2(e, off) / b.on_fraction()));
  // Maximum over the branch is 1 / (2 p1); above it there is no root.
  CHECK_FALSE(closed_form_p2(0.7, e, off).has_value());
  CHECK(closed_form_p2(0.0, e, off) == 0.0);
}

TEST_CASE("p2 calibration") {
  auto c = preset("nominal_dot");
  c.blinking = source::BlinkingModel::disabled();
  const RunOptions run{3, 200'000, 0};
  SUBCASE("target 0 is the ideal source") {
    const auto cal = calibrate_p2(c, 0.0, 0.001, run);
    CHECK(cal.p2 == 0.0);
    CHECK(cal.g2 == 0.0);
    CHECK(cal.converged);
  }
  SUBCASE("target 1 without blinking matches the closed form") {
    c.emission.p1 = 0.2;
    const auto cal = calibrate_p2(c, 1.0, 0.05, {3, 1'000'000, 0});
    REQUIRE(cal.closed_form_p2.has_value());
    CHECK(cal.converged);
    CHECK(std::abs(cal.g2 - 1.0) < 0.05);
    CHECK(cal.p2 == doctest::Approx(*cal.closed_form_p2).epsilon(0.15));
  }
  SUBCASE("unreachable target") {
    CHECK(kind_of([&] { calibrate_p2(c, 0.9, 0.01, run); }) == ErrorKind::NonBracketing);
  }
  SUBCASE("reproducible") {
    const auto a = calibrate_p2(c, 0.05, 0.005, run);
    const auto b = calibrate_p2(c, 0.05, 0.005, run);
    CHECK(a.p2 == b.p2);
    CHECK(a.g2 == b.g2);
  }
}

TEST_CASE("sweep needs four detunings") {
  auto c = preset("nominal_dot");
  c.detunings_nm = {0.0, 0.1, 0.2};
  CHECK(kind_of([&] { run_lifetime_sweep(c, {1, 1000, 0}); }) == ErrorKind::InsufficientSpan);
}

TEST_CASE("report body") {
  Report r;
  r.add("x", 0.5);
  r.add("name", std::string("nominal"));
  r.add_runtime("stage", 1.25);
  CHECK(r.check("in", 1.0, 0.0, 2.0).pass);
  CHECK_FALSE(r.check("out", 3.0, 0.0, 2.0).pass);
  CHECK(r.check("flag", true).pass);
  CHECK_FALSE(r.all_pass());
  const auto body = r.body();
  CHECK(body.find("x = 0.5\n") != std::string::npos);
  CHECK(body.find("check.out = FAIL value=3 expected=[0, 2]") != std::string::npos);
  CHECK(body.find("runtime") == std::string::npos);
  CHECK(r.runtimes() == "runtime.stage_s = 1.250\n");
}

TEST_CASE("window sensitivity with a dark-count floor") {
  auto c = preset("nominal_dot");
  c.windows_ns = {4.0, 1.0};
  const auto clean = run_hbt(c, {5, 2'000'000, 0});
  // Without counts between peaks the estimate barely depends on the window.
  CHECK(std::abs(clean.reports[1].g2_zero - clean.reports[0].g2_zero) <
        3.0 * std::hypot(clean.reports[0].g2_zero_error, clean.reports[1].g2_zero_error));
  c.detector1.dark_rate_per_ns = c.detector2.dark_rate_per_ns = 1e-4;
  const auto floor = run_hbt(c, {5, 2'000'000, 0});
  CHECK(floor.reports[0].g2_zero > clean.reports[0].g2_zero);
  CHECK(floor.reports[1].g2_zero < floor.reports[0].g2_zero);
}

TEST_CASE("g2 estimator converges as 1/sqrt(N)") {
  const auto c = preset("nominal_dot");
  const auto big = run_hbt(c, {11, 10'000'000, 0}).reports.front();
  for (std::uint64_t n : {100'000ull, 1'000'000ull}) {
    CAPTURE(n);
    const auto r = run_hbt(c, {12, n, 0}).reports.front();
    const double expected_ratio = std::sqrt(10'000'000.0 / static_cast<double>(n));
    CHECK(r.g2_zero_error / big.g2_zero_error == doctest::Approx(expected_ratio).epsilon(0.3));
    CHECK(std::abs(r.g2_zero - big.g2_zero) < 3.0 * std::hypot(r.g2_zero_error, big.g2_zero_error));
  }
}
