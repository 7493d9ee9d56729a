#pragma once

#include "config.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spsim::app {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitSimulation = 3,
  kExitCheckFailed = 4,
};

struct CommandOptions {
  std::string config_path;  // empty: built-in preset only
  std::string preset;       // empty: the command's default preset
  std::optional<std::uint64_t> seed;
  std::string out_dir;      // empty: the config's output_dir
  std::uint64_t pulses = 0; // 0: the config's pulse count
  bool fast = false;
  bool cross_check = false;
  std::string correlator;   // empty, "tac" or "all_pairs"
  unsigned threads = 0;
  bool svg = false;

  std::vector<double> detunings_nm;
  std::optional<double> target_g2;
  std::optional<double> tolerance;
  std::string histogram_path;
};

/// Loads the preset (built-in or from the config file) and applies the
/// command-line overrides.
ExperimentConfig resolve_config(const CommandOptions& options, const std::string& default_preset);

int cmd_cavity(const CommandOptions& options, std::ostream& out);
int cmd_lifetime_sweep(const CommandOptions& options, std::ostream& out);
int cmd_hbt(const CommandOptions& options, std::ostream& out);
int cmd_calibrate(const CommandOptions& options, std::ostream& out);
int cmd_analyze(const CommandOptions& options, std::ostream& out);
int cmd_reproduce(const CommandOptions& options, std::ostream& out);

}  // namespace spsim::app
