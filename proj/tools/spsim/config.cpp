#include "config.hpp"

#include "spsim/error.hpp"
#include "spsim/io.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace spsim::app {

namespace {

// Values shared by the Monte Carlo presets. Desk-scale statistics at 10^7
// pulses need a detection efficiency far above the real setup's, which
// makes first-stop pile-up visible; these presets therefore use the
// all-pairs estimator without dead time. The histogram spans +-200 ns so
// that the blinking envelope is sampled over several tau_b.
ExperimentConfig monte_carlo_base() {
  ExperimentConfig c;
  c.emission.gamma = purcell::decay_rate(c.decay.mode.lambda_c_nm, c.decay);
  c.emission.p1 = 0.8;
  hbt::DetectorModel det;
  det.efficiency = 0.25;
  det.jitter_fwhm_ns = 0.13 * hbt::kFwhmPerSigma;
  det.dead_time_ns = 0.0;
  c.detector1 = c.detector2 = det;
  c.histogram.correlator = hbt::Correlator::AllPairs;
  c.histogram.range_ns = 200.0;
  return c;
}

const std::map<std::string, ExperimentConfig (*)(), std::less<>>& builtin() {
  static const std::map<std::string, ExperimentConfig (*)(), std::less<>> table{
      {"paper_stack",
       [] {
         ExperimentConfig c;
         c.name = "paper_stack";
         return c;
       }},
      {"nominal_dot",
       [] {
         auto c = monte_carlo_base();
         c.name = "nominal_dot";
         // Closed-form root of g2(0) = 0.02 with the nominal blinking; `spsim calibrate`
         // lands within its 0.001 tolerance of the same target.
         c.emission.p2 = 0.00492;
         return c;
       }},
      {"ideal_source",
       [] {
         auto c = monte_carlo_base();
         c.name = "ideal_source";
         c.emission.p2 = 0.0;
         return c;
       }},
      {"poisson_benchmark",
       [] {
         auto c = monte_carlo_base();
         c.name = "poisson_benchmark";
         c.blinking = source::BlinkingModel::disabled();
         c.emission.statistics = source::PhotonStatistics::Poissonian;
         c.emission.poisson_mean = 0.8;
         return c;
       }},
  };
  return table;
}

[[noreturn]] void config_error(std::string_view origin, const YAML::Node& node, const std::string& what) {
  const auto mark = node.Mark();
  if (mark.is_null()) fail(ErrorKind::Config, fmt::format("{}: {}", origin, what));
  fail(ErrorKind::Config, fmt::format("{}:{}: {}", origin, mark.line + 1, what));
}

class Reader {
 public:
  Reader(const YAML::Node& node, std::string_view origin, std::string section)
      : node_(node), origin_(origin), section_(std::move(section)) {
    if (!node_.IsMap()) config_error(origin_, node_, "section '" + section_ + "' must be a mapping");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto v = node_[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      config_error(origin_, v, fmt::format("bad value for {}.{}", section_, key));
    }
  }

  template <class E>
  void get_enum(const char* key, E& out, std::initializer_list<std::pair<const char*, E>> names) {
    std::string s;
    const bool present = static_cast<bool>(node_[key]);
    get(key, s);
    if (!present) return;
    for (const auto& [n, e] : names)
      if (s == n) {
        out = e;
        return;
      }
    config_error(origin_, node_[key], fmt::format("unknown value '{}' for {}.{}", s, section_, key));
  }

  YAML::Node child(const char* key) {
    seen_.insert(key);
    return node_[key];
  }

  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) config_error(origin_, kv.first, fmt::format("unknown key '{}' in {}", key, section_));
    }
  }

 private:
  YAML::Node node_;
  std::string_view origin_;
  std::string section_;
  std::set<std::string> seen_;
};

void read_detector(Reader& r, hbt::DetectorModel& d) {
  r.get("efficiency", d.efficiency);
  r.get("jitter_fwhm_ns", d.jitter_fwhm_ns);
  double sigma = -1.0;
  r.get("jitter_sigma_ns", sigma);
  if (sigma >= 0.0) d.jitter_fwhm_ns = sigma * hbt::kFwhmPerSigma;
  r.get("dead_time_ns", d.dead_time_ns);
  r.get("dark_rate_per_ns", d.dark_rate_per_ns);
  r.finish();
}

void apply(const YAML::Node& node, ExperimentConfig& c, std::string_view origin) {
  Reader top(node, origin, "preset");
  top.child("base");
  if (const auto s = top.child("seed")) {
    try {
      c.seed = s.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      config_error(origin, s, "seed must be an unsigned 64-bit integer");
    }
  }
  top.get("output_dir", c.output_dir);

  if (const auto n = top.child("stack")) {
    Reader r(n, origin, "stack");
    auto& s = c.stack;
    r.get("top_pairs", s.top_pairs);
    r.get("bottom_pairs", s.bottom_pairs);
    r.get("spacer_nm", s.spacer_nm);
    r.get("gaas_nm", s.gaas_nm);
    r.get("alas_nm", s.alas_nm);
    r.get("n_gaas", s.n_gaas);
    r.get("n_alas", s.n_alas);
    r.get("ambient_index", s.ambient_index);
    r.get("substrate_index", s.substrate_index);
    if (const auto cap = r.child("cap")) {
      Reader cr(cap, origin, "stack.cap");
      optics::Layer layer{0.0, optics::kSapphireIndex, "cap"};
      cr.get("thickness_nm", layer.thickness_nm);
      cr.get("index", layer.index);
      cr.finish();
      s.cap = layer;
    }
    r.get("spectrum_min_nm", c.spectrum.min_nm);
    r.get("spectrum_max_nm", c.spectrum.max_nm);
    r.get("spectrum_samples", c.spectrum.samples);
    r.get("fdtd_dx_nm", c.spectrum.fdtd_dx_nm);
    r.finish();
  }
  bool gamma_set = false;
  if (const auto n = top.child("cavity")) {
    Reader r(n, origin, "cavity");
    r.get("lambda_c_nm", c.decay.mode.lambda_c_nm);
    r.get("q_factor", c.decay.mode.q_factor);
    r.finish();
  }
  if (const auto n = top.child("decay")) {
    Reader r(n, origin, "decay");
    r.get("gamma_max", c.decay.gamma_max);
    r.get("gamma_min", c.decay.gamma_min);
    r.finish();
  }
  if (const auto n = top.child("blinking")) {
    Reader r(n, origin, "blinking");
    bool enabled = !c.blinking.is_disabled();
    r.get("enabled", enabled);
    r.get("k_on", c.blinking.k_on);
    r.get("k_off", c.blinking.k_off);
    r.get_enum("initial", c.blinking.initial,
               {{"on", source::InitialState::On},
                {"off", source::InitialState::Off},
                {"stationary", source::InitialState::Stationary}});
    r.finish();
    if (!enabled) c.blinking = source::BlinkingModel::disabled();
  }
  if (const auto n = top.child("emission")) {
    Reader r(n, origin, "emission");
    gamma_set = static_cast<bool>(n["gamma"]);
    r.get("gamma", c.emission.gamma);
    r.get("p1", c.emission.p1);
    r.get("p2", c.emission.p2);
    r.get_enum("statistics", c.emission.statistics,
               {{"truncated", source::PhotonStatistics::Truncated},
                {"poissonian", source::PhotonStatistics::Poissonian}});
    r.get("poisson_mean", c.emission.poisson_mean);
    r.get("background_rate_per_ns", c.emission.background_rate_per_ns);
    r.get("detuning_nm", c.hbt_detuning_nm);
    r.finish();
  }
  // Unless pinned explicitly, the emission rate follows the decay model.
  if (!gamma_set) c.emission.gamma = purcell::decay_rate(c.decay.mode.lambda_c_nm + c.hbt_detuning_nm, c.decay);
  if (const auto n = top.child("pulses")) {
    Reader r(n, origin, "pulses");
    r.get("period_ns", c.train.period_ns);
    r.get("count", c.train.n_pulses);
    r.finish();
  }
  if (const auto n = top.child("detector")) {
    Reader r(n, origin, "detector");
    read_detector(r, c.detector1);
    c.detector2 = c.detector1;
  }
  if (const auto n = top.child("detector1")) {
    Reader r(n, origin, "detector1");
    read_detector(r, c.detector1);
  }
  if (const auto n = top.child("detector2")) {
    Reader r(n, origin, "detector2");
    read_detector(r, c.detector2);
  }
  if (const auto n = top.child("histogram")) {
    Reader r(n, origin, "histogram");
    r.get("bin_width_ns", c.histogram.bin_width_ns);
    r.get("range_ns", c.histogram.range_ns);
    r.get_enum("correlator", c.histogram.correlator,
               {{"tac", hbt::Correlator::Tac}, {"all_pairs", hbt::Correlator::AllPairs}});
    r.finish();
  }
  if (const auto n = top.child("streak")) {
    Reader r(n, origin, "streak");
    r.get("bin_width_ns", c.streak.bin_width_ns);
    r.get("start_ns", c.streak.start_ns);
    r.get("irf_fwhm_ns", c.streak.irf_fwhm_ns);
    r.get("fit_start_offset_ns", c.streak.fit_start_offset_ns);
    r.finish();
  }
  if (const auto n = top.child("analysis")) {
    Reader r(n, origin, "analysis");
    r.get("windows_ns", c.windows_ns);
    r.get_enum("a_inf", c.g2.a_inf_source,
               {{"envelope_fit", analysis::AInfSource::EnvelopeFit},
                {"farthest_peak", analysis::AInfSource::FarthestPeak}});
    r.get_enum("nearest", c.g2.nearest,
               {{"symmetric_mean", analysis::NearestPeak::SymmetricMean},
                {"positive_only", analysis::NearestPeak::PositiveOnly}});
    r.finish();
  }
  if (const auto n = top.child("sweep")) {
    Reader r(n, origin, "sweep");
    r.get("detunings_nm", c.detunings_nm);
    r.get("pulses", c.sweep_pulses);
    r.finish();
  }
  if (const auto n = top.child("calibration")) {
    Reader r(n, origin, "calibration");
    r.get("target_g2", c.calibration.target_g2);
    r.get("tolerance", c.calibration.tolerance);
    r.get("pulses", c.calibration.pulses);
    r.finish();
  }
  top.finish();
}

ExperimentConfig resolve(const YAML::Node& presets, const std::string& name, std::string_view origin,
                         std::vector<std::string>& chain) {
  if (std::find(chain.begin(), chain.end(), name) != chain.end())
    fail(ErrorKind::Config, fmt::format("{}: preset '{}' derives from itself", origin, name));
  const auto node = presets ? presets[name] : YAML::Node();
  if (!node) {
    if (builtin().count(name)) return preset(name);
    fail(ErrorKind::Config, fmt::format("{}: unknown preset '{}'", origin, name));
  }
  chain.push_back(name);
  ExperimentConfig c;
  if (!node.IsMap()) config_error(origin, node, "preset '" + name + "' must be a mapping");
  if (const auto base = node["base"]) {
    const auto b = base.as<std::string>();
    // A file preset may shadow the built-in of the same name and extend it.
    c = b == name && builtin().count(b) ? preset(b) : resolve(presets, b, origin, chain);
  } else if (builtin().count(name)) {
    c = preset(name);
  }
  apply(node, c, origin);
  c.name = name;
  chain.pop_back();
  return c;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& kv : builtin()) out.push_back(kv.first);
  return out;
}

ExperimentConfig preset(std::string_view name) {
  const auto it = builtin().find(name);
  if (it == builtin().end()) {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    fail(ErrorKind::Config, fmt::format("unknown preset '{}' (built-in: {})", name, known));
  }
  return it->second();
}

ExperimentConfig parse_config(std::string_view yaml, std::string_view which, std::string_view origin) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::ParserException& e) {
    fail(ErrorKind::Config, fmt::format("{}:{}: {}", origin, e.mark.line + 1, e.msg));
  }
  if (!root || root.IsNull()) fail(ErrorKind::Config, fmt::format("{}: empty config", origin));
  if (!root.IsMap()) config_error(origin, root, "top level must be a mapping");

  std::vector<std::string> chain;
  if (const auto presets = root["presets"]) {
    if (!presets.IsMap()) config_error(origin, presets, "'presets' must be a mapping");
    for (const auto& kv : root)
      if (const auto k = kv.first.as<std::string>(); k != "presets" && k != "use")
        config_error(origin, kv.first, "unknown top-level key '" + k + "'");
    std::string name(which);
    if (name.empty()) {
      if (const auto use = root["use"]) name = use.as<std::string>();
      else if (presets.size() == 1) name = presets.begin()->first.as<std::string>();
      else config_error(origin, root, "several presets defined; select one with 'use:' or --preset");
    }
    // Every preset must resolve, not just the selected one.
    for (const auto& kv : presets) resolve(presets, kv.first.as<std::string>(), origin, chain);
    return resolve(presets, name, origin, chain);
  }
  ExperimentConfig c;
  if (!which.empty()) c = preset(which);
  if (const auto base = root["base"]) c = resolve(YAML::Node(), base.as<std::string>(), origin, chain);
  apply(root, c, origin);
  if (c.name.empty()) c.name = "custom";
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::string_view which) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), which, path.string());
}

void validate(const ExperimentConfig& c) {
  build_micropost_stack(c.stack);
  require(c.spectrum.samples >= 2 && c.spectrum.max_nm > c.spectrum.min_nm && c.spectrum.min_nm > 0.0,
          "spectrum range must be increasing with >= 2 samples");
  require(c.spectrum.fdtd_dx_nm > 0.0, "fdtd_dx_nm must be > 0");
  purcell::validate(c.decay);
  source::validate(c.blinking);
  source::validate(c.emission);
  source::validate(c.train);
  hbt::validate(c.detector1);
  hbt::validate(c.detector2);
  hbt::validate(c.histogram);
  require(c.streak.bin_width_ns > 0.0 && c.streak.irf_fwhm_ns >= 0.0 && c.streak.fit_start_offset_ns >= 0.0,
          "invalid streak settings");
  require(!c.windows_ns.empty(), "at least one analysis window is required");
  for (double w : c.windows_ns) require(w > 0.0 && w <= c.train.period_ns, "analysis windows must lie in (0, period]");
  require(c.sweep_pulses > 0, "sweep pulses must be > 0");
  require(c.calibration.tolerance > 0.0 && c.calibration.pulses > 0, "invalid calibration settings");
}

std::string canonical_text(const ExperimentConfig& c) {
  std::string out;
  auto put = [&](std::string_view key, double v) { out += fmt::format("{} = {}\n", key, io::format_number(v)); };
  auto put_s = [&](std::string_view key, std::string_view v) { out += fmt::format("{} = {}\n", key, v); };
  const auto& s = c.stack;
  put("stack.top_pairs", s.top_pairs);
  put("stack.bottom_pairs", s.bottom_pairs);
  put("stack.spacer_nm", s.spacer_nm);
  put("stack.gaas_nm", s.gaas_nm);
  put("stack.alas_nm", s.alas_nm);
  put("stack.n_gaas", s.n_gaas);
  put("stack.n_alas", s.n_alas);
  put("stack.ambient_index", s.ambient_index);
  put("stack.substrate_index", s.substrate_index);
  if (s.cap) {
    put("stack.cap.thickness_nm", s.cap->thickness_nm);
    put("stack.cap.index", s.cap->index);
  }
  put("stack.spectrum_min_nm", c.spectrum.min_nm);
  put("stack.spectrum_max_nm", c.spectrum.max_nm);
  put("stack.spectrum_samples", c.spectrum.samples);
  put("stack.fdtd_dx_nm", c.spectrum.fdtd_dx_nm);
  put("cavity.lambda_c_nm", c.decay.mode.lambda_c_nm);
  put("cavity.q_factor", c.decay.mode.q_factor);
  put("decay.gamma_max", c.decay.gamma_max);
  put("decay.gamma_min", c.decay.gamma_min);
  put("blinking.k_on", c.blinking.k_on);
  put("blinking.k_off", c.blinking.k_off);
  put_s("blinking.initial", c.blinking.initial == source::InitialState::On    ? "on"
                            : c.blinking.initial == source::InitialState::Off ? "off"
                                                                              : "stationary");
  put("emission.gamma", c.emission.gamma);
  put("emission.p1", c.emission.p1);
  put("emission.p2", c.emission.p2);
  put_s("emission.statistics",
        c.emission.statistics == source::PhotonStatistics::Truncated ? "truncated" : "poissonian");
  put("emission.poisson_mean", c.emission.poisson_mean);
  put("emission.background_rate_per_ns", c.emission.background_rate_per_ns);
  put("emission.detuning_nm", c.hbt_detuning_nm);
  put("pulses.period_ns", c.train.period_ns);
  put("pulses.count", static_cast<double>(c.train.n_pulses));
  for (const auto& [tag, d] : {std::pair{"detector1", &c.detector1}, std::pair{"detector2", &c.detector2}}) {
    put(fmt::format("{}.efficiency", tag), d->efficiency);
    put(fmt::format("{}.jitter_fwhm_ns", tag), d->jitter_fwhm_ns);
    put(fmt::format("{}.dead_time_ns", tag), d->dead_time_ns);
    put(fmt::format("{}.dark_rate_per_ns", tag), d->dark_rate_per_ns);
  }
  put("histogram.bin_width_ns", c.histogram.bin_width_ns);
  put("histogram.range_ns", c.histogram.range_ns);
  put_s("histogram.correlator", c.histogram.correlator == hbt::Correlator::Tac ? "tac" : "all_pairs");
  put("streak.bin_width_ns", c.streak.bin_width_ns);
  put("streak.start_ns", c.streak.start_ns);
  put("streak.irf_fwhm_ns", c.streak.irf_fwhm_ns);
  put("streak.fit_start_offset_ns", c.streak.fit_start_offset_ns);
  std::string list;
  for (double w : c.windows_ns) list += (list.empty() ? "" : ",") + io::format_number(w);
  put_s("analysis.windows_ns", list);
  put_s("analysis.a_inf", c.g2.a_inf_source == analysis::AInfSource::EnvelopeFit ? "envelope_fit" : "farthest_peak");
  put_s("analysis.nearest", c.g2.nearest == analysis::NearestPeak::SymmetricMean ? "symmetric_mean" : "positive_only");
  list.clear();
  for (double d : c.detunings_nm) list += (list.empty() ? "" : ",") + io::format_number(d);
  put_s("sweep.detunings_nm", list.empty() ? "default" : list);
  put("sweep.pulses", static_cast<double>(c.sweep_pulses));
  put("calibration.target_g2", c.calibration.target_g2);
  put("calibration.tolerance", c.calibration.tolerance);
  put("calibration.pulses", static_cast<double>(c.calibration.pulses));
  return out;
}

std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char ch : canonical_text(c)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return fmt::format("{:016x}", h);
}

std::vector<double> default_detunings(const purcell::CavityMode& mode) {
  // x = 2 detuning / linewidth; alternating signs exercise the folding.
  const double half = 0.5 * mode.linewidth_nm();
  std::vector<double> out;
  for (double x : {0.0, -0.4, 0.8, -1.2, 1.6, -2.2, 3.0, -4.0}) out.push_back(x * half);
  return out;
}

}  // namespace spsim::app
