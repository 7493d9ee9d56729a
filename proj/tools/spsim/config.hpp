#pragma once

// Experiment configuration: built-in presets, YAML overrides and the
// canonical text form that the config hash is computed from.

#include "spsim/analysis.hpp"
#include "spsim/cavity_optics.hpp"
#include "spsim/hbt.hpp"
#include "spsim/photon_source.hpp"
#include "spsim/purcell.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spsim::app {

struct SpectrumSettings {
  double min_nm = optics::kDefaultSpectrumMinNm;
  double max_nm = optics::kDefaultSpectrumMaxNm;
  int samples = optics::kDefaultSpectrumSamples;
  double fdtd_dx_nm = 2.0;
};

struct StreakSettings {
  double bin_width_ns = 0.025;
  double start_ns = -0.5;
  double irf_fwhm_ns = 0.025;
  double fit_start_offset_ns = 0.05;
};

struct CalibrationSettings {
  double target_g2 = 0.02;
  double tolerance = 0.001;
  std::uint64_t pulses = 10'000'000;
};

struct ExperimentConfig {
  std::string name;
  optics::MicropostRecipe stack;
  SpectrumSettings spectrum;
  purcell::DecayModel decay = purcell::nominal_decay_model();
  source::BlinkingModel blinking;
  source::EmissionModel emission;
  source::PulseTrain train{source::kDefaultPeriodNs, 10'000'000};
  /// Emitter detuning used by the correlation run.
  double hbt_detuning_nm = 0.0;
  hbt::DetectorModel detector1, detector2;
  hbt::HistogramSpec histogram;
  StreakSettings streak;
  std::vector<double> windows_ns{4.0, 1.0};
  analysis::G2Options g2;
  /// Empty: default_detunings(decay.mode).
  std::vector<double> detunings_nm;
  std::uint64_t sweep_pulses = 1'000'000;  // per detuning
  CalibrationSettings calibration;
  std::optional<std::uint64_t> seed;
  std::string output_dir = "out";
};

std::vector<std::string> preset_names();

/// Throws Config for an unknown name.
ExperimentConfig preset(std::string_view name);

/// A YAML file holds named presets, each derived from a built-in or from
/// another preset of the same file through `base:`:
///
///   use: my_dot
///   presets:
///     my_dot:
///       base: nominal_dot
///       emission: {p2: 0.005}
///
/// A file without `presets:` is a single preset. `which` overrides `use:`.
/// Errors carry the file name and line.
ExperimentConfig load_config(const std::filesystem::path& path, std::string_view which = {});
ExperimentConfig parse_config(std::string_view yaml, std::string_view which = {},
                              std::string_view origin = "<string>");

/// Runs every module's validator on the resolved config.
void validate(const ExperimentConfig& config);

/// One `key = value` line per physical parameter. Seed and output directory
/// are excluded so that the hash identifies the physics, not the run.
std::string canonical_text(const ExperimentConfig& config);

/// FNV-1a over canonical_text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Eight detunings from -2 to +1.5 linewidths, alternating sides, with the
/// centre and both flanks represented.
std::vector<double> default_detunings(const purcell::CavityMode& mode);

}  // namespace spsim::app
