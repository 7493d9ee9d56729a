#include "commands.hpp"

#include "pipeline.hpp"
#include "report.hpp"
#include "svg.hpp"

#include "spsim/error.hpp"
#include "spsim/io.hpp"
#include "spsim/rng.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>

namespace spsim::app {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::uint64_t require_seed(const CommandOptions& o, const ExperimentConfig& c) {
  if (o.seed) return *o.seed;
  if (c.seed) return *c.seed;
  fail(ErrorKind::InvalidArgument, "a seed is required: pass --seed or set seed: in the config");
}

std::string window_key(double w) { return "window_" + io::format_number(w) + "ns"; }

// Writes artifacts into one directory, each CSV closed by a provenance line,
// and keeps a manifest of what was written.
class Artifacts {
 public:
  Artifacts(std::filesystem::path dir, std::string hash, std::string seed)
      : dir_(std::move(dir)), hash_(std::move(hash)), seed_(std::move(seed)) {}

  void csv(const std::string& name, const std::function<void(std::ostream&)>& body) {
    auto os = io::open_output(dir_ / name);
    body(os);
    os << "# config_hash=" << hash_ << " seed=" << seed_ << '\n';
    files_.push_back(name);
  }
  void text(const std::string& name, const std::string& content) {
    auto os = io::open_output(dir_ / name);
    os << content;
    files_.push_back(name);
  }
  void svg(const std::string& name, const std::vector<Plot>& panels) {
    write_svg(dir_ / name, panels);
    files_.push_back(name);
  }
  void manifest() {
    std::string m = fmt::format("config_hash = {}\nseed = {}\n", hash_, seed_);
    for (const auto& f : files_) m += "file = " + f + '\n';
    auto os = io::open_output(dir_ / "manifest.txt");
    os << m;
  }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::string hash_;
  std::string seed_;
  std::vector<std::string> files_;
};

std::filesystem::path out_dir(const CommandOptions& o, const ExperimentConfig& c) {
  return o.out_dir.empty() ? std::filesystem::path(c.output_dir) : std::filesystem::path(o.out_dir);
}

// Re-throws an error with the stage that produced it.
template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    std::string msg = e.what();
    const auto prefix = std::string(to_string(e.kind())) + ": ";
    if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    throw Error(e.kind(), fmt::format("stage {}: {}", name, msg));
  }
}

void report_header(Report& r, const ExperimentConfig& c, const std::string& hash) {
  r.add("preset", c.name);
  r.add("config_hash", hash);
}

void report_cavity(Report& r, const CavityOutcome& cav) {
  r.add("cavity.layers", static_cast<double>(cav.stack.layers.size()));
  r.add("cavity.lambda_c_nm", cav.resonance.lambda_c_nm);
  r.add("cavity.fwhm_nm", cav.resonance.fwhm_nm);
  r.add("cavity.q_tmm", cav.resonance.q_factor);
  r.add("cavity.stopband_lo_nm", cav.resonance.stopband_lo_nm);
  r.add("cavity.stopband_hi_nm", cav.resonance.stopband_hi_nm);
  if (cav.fdtd) {
    r.add("cavity.fdtd.stopband_rms", cav.fdtd->stopband_rms);
    r.add("cavity.q_fdtd", cav.fdtd->ringdown.q_factor);
    r.add("cavity.q_relative_difference", cav.fdtd->q_relative_difference);
  }
}

void report_sweep(Report& r, const SweepOutcome& s) {
  for (std::size_t i = 0; i < s.curve.points.size(); ++i) {
    const auto& p = s.curve.points[i];
    const std::string k = fmt::format("sweep.point{}", i);
    r.add(k + ".detuning_nm", s.runs[i].detuning_nm);
    r.add(k + ".tau_ns", p.tau_ns);
    r.add(k + ".tau_error_ns", p.tau_error);
  }
  const auto& f = s.curve.fit;
  r.add("sweep.gamma_max_per_ns", f.model.gamma_max);
  r.add("sweep.gamma_min_per_ns", f.model.gamma_min);
  r.add("sweep.linewidth_nm", f.linewidth_nm);
  r.add("sweep.q_factor", s.q_factor);
  r.add("sweep.purcell_factor", s.purcell_factor);
}

void report_hbt(Report& r, const std::string& prefix, const HbtOutcome& h) {
  r.add(prefix + ".pulses", static_cast<double>(h.pulses));
  r.add(prefix + ".photons", static_cast<double>(h.photons));
  r.add(prefix + ".clicks1", static_cast<double>(h.clicks1));
  r.add(prefix + ".clicks2", static_cast<double>(h.clicks2));
  r.add(prefix + ".coincidences", static_cast<double>(h.histogram.total()));
  for (const auto& g : h.reports) {
    const auto k = prefix + "." + window_key(g.window_ns);
    r.add(k + ".g2_zero", g.g2_zero);
    r.add(k + ".g2_zero_error", g.g2_zero_error);
    r.add(k + ".g_nearest", g.g_nearest);
    r.add(k + ".g_nearest_error", g.g_nearest_error);
    r.add(k + ".a0", g.a0);
    r.add(k + ".a1", g.a1);
    r.add(k + ".a_inf", g.a_inf);
  }
  const auto& env = h.reports.front().envelope;
  r.add(prefix + ".envelope.a_inf", env.a_inf);
  r.add(prefix + ".envelope.beta", env.beta);
  r.add(prefix + ".envelope.beta_error", env.beta_error);
  r.add(prefix + ".envelope.tau_b_ns", env.tau_b_ns);
  r.add(prefix + ".envelope.tau_b_error_ns", env.tau_b_error);
}

void write_sweep_csv(Artifacts& a, const SweepOutcome& s) {
  std::vector<io::DecayCurveRow> rows;
  for (std::size_t i = 0; i < s.runs.size(); ++i) rows.push_back({s.runs[i].detuning_nm, s.curve.points[i].gamma_per_ns});
  a.csv("decay_curve.csv", [&](std::ostream& os) { io::write_decay_curve_csv(os, rows); });
  for (std::size_t i = 0; i < s.runs.size(); ++i)
    a.csv(fmt::format("streak_{}.csv", i), [&](std::ostream& os) { io::write_streak_csv(os, s.runs[i].streak); });
}

Plot decay_plot(const SweepOutcome& s) {
  Plot p{"Decay rate vs detuning", "|detuning| (nm)", "decay rate (1/ns)", false, {}};
  Series pts{{}, {}, "#d62728", true, "Monte Carlo"};
  double max_det = 0.0;
  for (const auto& q : s.curve.points) {
    pts.x.push_back(q.abs_detuning_nm);
    pts.y.push_back(q.gamma_per_ns);
    max_det = std::max(max_det, q.abs_detuning_nm);
  }
  Series fit{{}, {}, "#1f77b4", false, "Lorentzian fit"};
  auto model = s.curve.fit.model;
  for (int i = 0; i <= 200; ++i) {
    const double d = max_det * i / 200.0;
    fit.x.push_back(d);
    fit.y.push_back(purcell::decay_rate(model.mode.lambda_c_nm + d, model));
  }
  p.series = {pts, fit};
  return p;
}

Plot streak_plot(const std::vector<const StreakOutcome*>& runs) {
  Plot p{"Decay traces", "time (ns)", "counts", true, {}};
  const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd"};
  std::size_t c = 0;
  for (const auto* r : runs) {
    Series s{{}, {}, colors[c++ % 4], false, fmt::format("detuning {} nm", io::format_number(r->detuning_nm))};
    for (std::size_t i = 0; i < r->streak.counts.size(); ++i) {
      if (r->streak.bin_center(i) > 5.0) break;
      s.x.push_back(r->streak.bin_center(i));
      s.y.push_back(static_cast<double>(r->streak.counts[i]));
    }
    p.series.push_back(std::move(s));
  }
  return p;
}

Plot histogram_plot(const hbt::CorrelationHistogram& h, const std::string& title) {
  Plot p{title, "delay (ns)", "coincidences", false, {}};
  Series s{{}, {}, "#1f77b4", false, ""};
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    s.x.push_back(h.bin_center(i));
    s.y.push_back(static_cast<double>(h.counts[i]));
  }
  p.series.push_back(std::move(s));
  return p;
}

// Provenance line at the end of a CSV written by this tool.
std::optional<std::string> read_hash(const std::filesystem::path& path) {
  auto is = io::open_input(path);
  std::string line;
  std::optional<std::string> hash;
  while (std::getline(is, line)) {
    const auto pos = line.find("# config_hash=");
    if (pos != 0) continue;
    const auto start = std::string("# config_hash=").size();
    hash = line.substr(start, line.find(' ', start) - start);
  }
  return hash;
}

}  // namespace

ExperimentConfig resolve_config(const CommandOptions& o, const std::string& default_preset) {
  ExperimentConfig c = o.config_path.empty() ? preset(o.preset.empty() ? default_preset : o.preset)
                                             : load_config(o.config_path, o.preset);
  if (o.correlator == "tac")
    c.histogram.correlator = hbt::Correlator::Tac;
  else if (o.correlator == "all_pairs")
    c.histogram.correlator = hbt::Correlator::AllPairs;
  else if (!o.correlator.empty())
    fail(ErrorKind::InvalidArgument, "--correlator must be tac or all_pairs");
  if (!o.detunings_nm.empty()) c.detunings_nm = o.detunings_nm;
  validate(c);
  return c;
}

int cmd_cavity(const CommandOptions& o, std::ostream& out) {
  const auto c = resolve_config(o, "paper_stack");
  const auto hash = config_hash(c);
  const auto t0 = Clock::now();
  const auto cav = run_cavity(c, o.cross_check);
  Artifacts a(out_dir(o, c), hash, "none");
  a.csv("spectrum.csv", [&](std::ostream& os) { io::write_spectrum_csv(os, cav.spectrum); });
  Report r;
  report_header(r, c, hash);
  report_cavity(r, cav);
  if (cav.fdtd) {
    a.csv("fdtd_spectrum.csv", [&](std::ostream& os) { io::write_spectrum_csv(os, cav.fdtd->spectrum); });
    a.csv("ringdown.csv", [&](std::ostream& os) { io::write_ringdown_csv(os, cav.fdtd->ringdown.record); });
    r.add_runtime("fdtd", cav.fdtd->seconds);
  }
  r.add_runtime("total", since(t0));
  if (o.svg) {
    Plot p{"Planar cavity reflectance", "wavelength (nm)", "reflectance", false, {}};
    p.series.push_back({cav.spectrum.wavelength_nm, cav.spectrum.reflectance, "#1f77b4", false, "transfer matrix"});
    if (cav.fdtd) p.series.push_back({cav.fdtd->spectrum.wavelength_nm, cav.fdtd->spectrum.reflectance, "#d62728", false, "FDTD"});
    a.svg("spectrum.svg", {p});
  }
  a.text("cavity_report.txt", r.text());
  a.manifest();
  out << r.text();
  return kExitOk;
}

int cmd_lifetime_sweep(const CommandOptions& o, std::ostream& out) {
  const auto c = resolve_config(o, "nominal_dot");
  const auto seed = require_seed(o, c);
  const auto hash = config_hash(c);
  const auto t0 = Clock::now();
  RunOptions run{seed, o.pulses ? o.pulses : (o.fast ? 100'000 : 0), o.threads};
  const auto sweep = run_lifetime_sweep(c, run);
  Artifacts a(out_dir(o, c), hash, std::to_string(seed));
  write_sweep_csv(a, sweep);
  Report r;
  report_header(r, c, hash);
  r.add("seed", std::to_string(seed));
  report_sweep(r, sweep);
  r.add_runtime("total", since(t0));
  if (o.svg) a.svg("decay_curve.svg", {decay_plot(sweep)});
  a.text("lifetime_report.txt", r.text());
  a.manifest();
  out << r.text();
  return kExitOk;
}

int cmd_hbt(const CommandOptions& o, std::ostream& out) {
  const auto c = resolve_config(o, "nominal_dot");
  const auto seed = require_seed(o, c);
  const auto hash = config_hash(c);
  const auto t0 = Clock::now();
  const auto h = run_hbt(c, {seed, o.pulses ? o.pulses : (o.fast ? 100'000 : 0), o.threads});
  Artifacts a(out_dir(o, c), hash, std::to_string(seed));
  a.csv("histogram.csv", [&](std::ostream& os) { io::write_histogram_csv(os, h.histogram); });
  Report r;
  report_header(r, c, hash);
  r.add("seed", std::to_string(seed));
  r.add("correlator", c.histogram.correlator == hbt::Correlator::Tac ? "tac" : "all_pairs");
  report_hbt(r, "hbt", h);
  r.add_runtime("total", since(t0));
  if (o.svg) a.svg("histogram.svg", {histogram_plot(h.histogram, "Photon correlation histogram")});
  a.text("hbt_report.txt", r.text());
  a.manifest();
  out << r.text();
  return kExitOk;
}

int cmd_calibrate(const CommandOptions& o, std::ostream& out) {
  const auto c = resolve_config(o, "nominal_dot");
  const auto seed = require_seed(o, c);
  const auto hash = config_hash(c);
  const double target = o.target_g2.value_or(c.calibration.target_g2);
  const double tol = o.tolerance.value_or(c.calibration.tolerance);
  const auto t0 = Clock::now();
  const auto pulses = o.pulses ? o.pulses : (o.fast ? 1'000'000 : c.calibration.pulses);
  const auto cal = calibrate_p2(c, target, tol, {seed, pulses, o.threads});
  Report r;
  report_header(r, c, hash);
  r.add("seed", std::to_string(seed));
  r.add("calibration.target_g2", target);
  r.add("calibration.tolerance", tol);
  r.add("calibration.pulses", static_cast<double>(pulses));
  r.add("calibration.p2", cal.p2);
  r.add("calibration.g2_zero", cal.g2);
  r.add("calibration.evaluations", cal.evaluations);
  r.add("calibration.converged", cal.converged ? "true" : "false");
  r.add("calibration.closed_form_p2", cal.closed_form_p2 ? io::format_number(*cal.closed_form_p2) : "none");
  r.add_runtime("total", since(t0));
  Artifacts a(out_dir(o, c), hash, std::to_string(seed));
  a.text("calibration_report.txt", r.text());
  a.manifest();
  out << r.text();
  return kExitOk;
}

int cmd_analyze(const CommandOptions& o, std::ostream& out) {
  if (o.histogram_path.empty()) fail(ErrorKind::InvalidArgument, "analyze needs --histogram FILE");
  const auto c = resolve_config(o, "nominal_dot");
  const auto hash = config_hash(c);
  const auto recorded = read_hash(o.histogram_path);
  const bool explicit_config = !o.config_path.empty() || !o.preset.empty();
  if (recorded && explicit_config && *recorded != hash)
    fail(ErrorKind::Config, fmt::format("{} was produced with config hash {}, but the given config hashes to {}",
                                        o.histogram_path, *recorded, hash));
  auto is = io::open_input(o.histogram_path);
  const auto hist = io::read_histogram_csv(is);
  const auto reports = analysis::window_sensitivity(hist, c.train.period_ns, c.windows_ns, -1, c.g2);
  Report r;
  report_header(r, c, hash);
  r.add("input", o.histogram_path);
  r.add("input.config_hash", recorded.value_or("none"));
  for (const auto& g : reports) {
    const auto k = "analysis." + window_key(g.window_ns);
    r.add(k + ".g2_zero", g.g2_zero);
    r.add(k + ".g2_zero_error", g.g2_zero_error);
    r.add(k + ".g_nearest", g.g_nearest);
    r.add(k + ".g_nearest_error", g.g_nearest_error);
  }
  const auto& env = reports.front().envelope;
  r.add("analysis.envelope.a_inf", env.a_inf);
  r.add("analysis.envelope.beta", env.beta);
  r.add("analysis.envelope.tau_b_ns", env.tau_b_ns);
  if (!o.out_dir.empty()) {
    Artifacts a(o.out_dir, hash, "none");
    a.text("analysis_report.txt", r.text());
    a.manifest();
  }
  out << r.text();
  return kExitOk;
}

int cmd_reproduce(const CommandOptions& o, std::ostream& out) {
  const auto nominal = resolve_config(o, "nominal_dot");
  const std::uint64_t seed = o.seed.value_or(nominal.seed.value_or(1));
  const bool fast = o.fast;
  const std::uint64_t hbt_pulses = o.pulses ? o.pulses : (fast ? 100'000 : nominal.train.n_pulses);
  const std::uint64_t sweep_pulses = fast ? 100'000 : nominal.sweep_pulses;
  const std::uint64_t cal_pulses = fast ? 1'000'000 : nominal.calibration.pulses;
  const double cal_tolerance = fast ? 0.005 : nominal.calibration.tolerance;
  const auto hash = config_hash(nominal);
  Artifacts a(out_dir(o, nominal), hash, std::to_string(seed));
  Report r;
  report_header(r, nominal, hash);
  r.add("seed", std::to_string(seed));
  r.add("mode", fast ? "fast" : "full");
  const auto t_all = Clock::now();

  // Planar cavity.
  auto t0 = Clock::now();
  const auto cav = stage("cavity", [&] { return run_cavity(nominal, o.cross_check); });
  report_cavity(r, cav);
  a.csv("spectrum.csv", [&](std::ostream& os) { io::write_spectrum_csv(os, cav.spectrum); });
  r.add_runtime("cavity", since(t0));

  // Purcell sweep and the on/off lifetime pair.
  t0 = Clock::now();
  const auto sweep = stage("lifetime_sweep", [&] {
    return run_lifetime_sweep(nominal, {rng::derive_seed(seed, 10), sweep_pulses, o.threads});
  });
  report_sweep(r, sweep);
  write_sweep_csv(a, sweep);
  r.add_runtime("lifetime_sweep", since(t0));

  t0 = Clock::now();
  const double off_detuning = 20.0 * nominal.decay.mode.linewidth_nm();
  const auto on = stage("lifetime_on", [&] {
    return run_streak(nominal, 0.0, {rng::derive_seed(seed, 11), sweep_pulses, o.threads});
  });
  const auto off = stage("lifetime_off", [&] {
    return run_streak(nominal, off_detuning, {rng::derive_seed(seed, 12), sweep_pulses, o.threads});
  });
  r.add("lifetime.on.tau_ns", on.fit.tau_ns);
  r.add("lifetime.on.tau_error_ns", on.fit.tau_error);
  r.add("lifetime.off.detuning_nm", off_detuning);
  r.add("lifetime.off.tau_ns", off.fit.tau_ns);
  r.add("lifetime.off.tau_error_ns", off.fit.tau_error);
  r.add("lifetime.ratio", off.fit.tau_ns / on.fit.tau_ns);
  a.csv("streak_on.csv", [&](std::ostream& os) { io::write_streak_csv(os, on.streak); });
  a.csv("streak_off.csv", [&](std::ostream& os) { io::write_streak_csv(os, off.streak); });
  r.add_runtime("lifetime_pair", since(t0));

  // p2 calibration, then the correlation run with the calibrated source.
  t0 = Clock::now();
  const auto cal = stage("calibration", [&] {
    return calibrate_p2(nominal, nominal.calibration.target_g2, cal_tolerance,
                        {rng::derive_seed(seed, 13), cal_pulses, o.threads});
  });
  r.add("calibration.target_g2", nominal.calibration.target_g2);
  r.add("calibration.p2", cal.p2);
  r.add("calibration.g2_zero", cal.g2);
  r.add("calibration.converged", cal.converged ? "true" : "false");
  r.add("calibration.closed_form_p2", cal.closed_form_p2 ? io::format_number(*cal.closed_form_p2) : "none");
  r.add_runtime("calibration", since(t0));

  t0 = Clock::now();
  auto calibrated = nominal;
  calibrated.emission.p2 = cal.p2;
  const auto h = stage("hbt", [&] { return run_hbt(calibrated, {rng::derive_seed(seed, 14), hbt_pulses, o.threads}); });
  report_hbt(r, "hbt", h);
  a.csv("histogram.csv", [&](std::ostream& os) { io::write_histogram_csv(os, h.histogram); });
  r.add_runtime("hbt", since(t0));

  t0 = Clock::now();
  auto poisson = preset("poisson_benchmark");
  auto ideal = preset("ideal_source");
  for (auto* p : {&poisson, &ideal}) {
    p->histogram = nominal.histogram;
    p->detector1 = nominal.detector1;
    p->detector2 = nominal.detector2;
    p->windows_ns = nominal.windows_ns;
  }
  const auto hp = stage("poisson_benchmark", [&] { return run_hbt(poisson, {rng::derive_seed(seed, 15), hbt_pulses, o.threads}); });
  const auto hi = stage("ideal_source", [&] { return run_hbt(ideal, {rng::derive_seed(seed, 16), hbt_pulses, o.threads}); });
  report_hbt(r, "poisson", hp);
  report_hbt(r, "ideal", hi);
  r.add_runtime("benchmarks", since(t0));

  // Headline checks.
  const auto& g4 = h.reports.front();
  r.check("cavity_q", cav.resonance.q_factor, 3000.0, 5000.0);
  r.check("cavity_lambda_nm", cav.resonance.lambda_c_nm, 940.0, 980.0);
  r.check("purcell_factor", sweep.purcell_factor, fast ? 4.0 : 4.5, fast ? 6.0 : 5.5);
  r.check("sweep_q", sweep.q_factor, 1270.0 * (fast ? 0.7 : 0.85), 1270.0 * (fast ? 1.3 : 1.15));
  r.check("lifetime_ratio", off.fit.tau_ns / on.fit.tau_ns, fast ? 4.5 : 4.75, fast ? 5.5 : 5.25);
  r.check("g2_zero_4ns", g4.g2_zero, fast ? 0.0 : 0.015, fast ? 0.05 : 0.025);
  r.check("g_nearest_below_g2", g4.g_nearest < g4.g2_zero, g4.g_nearest / g4.g2_zero);
  r.check("poisson_g2", hp.reports.front().g2_zero, fast ? 0.9 : 0.98, fast ? 1.1 : 1.02);
  r.check("ideal_g2", hi.reports.front().a0 == 0.0, hi.reports.front().g2_zero);
  if (cav.fdtd) {
    r.check("fdtd_stopband_rms", cav.fdtd->stopband_rms, 0.0, 0.01);
    r.check("fdtd_q_difference", cav.fdtd->q_relative_difference, 0.0, 0.10);
  }
  r.add_runtime("total", since(t_all));

  if (o.svg) {
    a.svg("fig2_lifetimes.svg", {decay_plot(sweep), streak_plot({&on, &off})});
    a.svg("fig3_correlation.svg", {histogram_plot(h.histogram, "Photon correlation, calibrated nominal dot")});
  }
  a.text("report.txt", r.text());
  a.manifest();
  out << r.text();
  return r.all_pass() ? kExitOk : kExitCheckFailed;
}

}  // namespace spsim::app
