#include "commands.hpp"

#include "spsim/error.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace spsim;

int main(int argc, char** argv) {
  CLI::App cli{"spsim: micropost single-photon source simulator"};
  cli.require_subcommand(1);
  app::CommandOptions o;

  auto common = [&](CLI::App* sub, bool monte_carlo) {
    sub->add_option("--config", o.config_path, "YAML config file")->check(CLI::ExistingFile);
    sub->add_option("--preset", o.preset, "preset name (built-in or defined in --config)");
    sub->add_option("--out", o.out_dir, "output directory");
    sub->add_flag("--svg", o.svg, "also write SVG plots");
    if (!monte_carlo) return;
    sub->add_option("--seed", o.seed, "64-bit seed");
    sub->add_option("--pulses", o.pulses, "excitation pulses per run");
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    sub->add_flag("--fast", o.fast, "1e5 pulses per run, widened tolerances");
  };

  auto* cavity = cli.add_subcommand("cavity", "planar cavity reflectance and Q");
  common(cavity, false);
  cavity->add_flag("--cross-check", o.cross_check, "confirm with the FDTD solver");

  auto* sweep = cli.add_subcommand("lifetime-sweep", "decay rate vs detuning and the Purcell factor");
  common(sweep, true);
  sweep->add_option("--detunings", o.detunings_nm, "detunings in nm (>= 4)")->delimiter(',');

  auto* hbt = cli.add_subcommand("hbt", "HBT correlation histogram and g2(0)");
  common(hbt, true);
  hbt->add_option("--correlator", o.correlator, "tac or all_pairs")->check(CLI::IsMember({"tac", "all_pairs"}));

  auto* cal = cli.add_subcommand("calibrate", "solve for p2 giving a target g2(0)");
  common(cal, true);
  cal->add_option("--target", o.target_g2, "target g2(0)");
  cal->add_option("--tolerance", o.tolerance, "absolute tolerance on g2(0)");
  cal->add_option("--correlator", o.correlator, "tac or all_pairs")->check(CLI::IsMember({"tac", "all_pairs"}));

  auto* analyze = cli.add_subcommand("analyze", "g2(0) from a histogram CSV");
  common(analyze, false);
  analyze->add_option("--histogram", o.histogram_path, "histogram CSV")->required()->check(CLI::ExistingFile);

  auto* reproduce = cli.add_subcommand("reproduce", "run every stage and check the headline numbers");
  common(reproduce, true);
  reproduce->add_flag("--cross-check", o.cross_check, "include the FDTD cross-check");
  reproduce->add_option("--correlator", o.correlator, "tac or all_pairs")->check(CLI::IsMember({"tac", "all_pairs"}));

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? app::kExitOk : app::kExitValidation;
  }

  try {
    if (*cavity) return app::cmd_cavity(o, std::cout);
    if (*sweep) return app::cmd_lifetime_sweep(o, std::cout);
    if (*hbt) return app::cmd_hbt(o, std::cout);
    if (*cal) return app::cmd_calibrate(o, std::cout);
    if (*analyze) return app::cmd_analyze(o, std::cout);
    if (*reproduce) return app::cmd_reproduce(o, std::cout);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_validation() ? app::kExitValidation : app::kExitSimulation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return app::kExitSimulation;
  }
  return app::kExitValidation;
}
