#include "lifespan/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

using namespace lifespan::experiment;

int main(int argc, char** argv) {
  CLI::App app{"Lifespan lab: Orlicz, test-function and ODE checks, damped Euler lifespan sweeps"};
  app.set_version_flag("--version", std::string(version));
  app.require_subcommand(1, 1);

  std::string config_path;
  // Flag values are kept as text and applied through the same parser as the
  // config file, so both paths share validation and error messages.
  std::map<std::string, std::string> flags;
  const std::pair<const char*, const char*> physical[] = {
      {"n", "Spatial dimension (1, 2 or 3)"},
      {"gamma", "Adiabatic index, > 1"},
      {"mu", "Damping strength"},
      {"lambda", "Damping decay exponent"},
      {"eps", "Amplitudes: a,b,c or lo:hi:count (log spaced)"},
      {"dr", "Grid spacing"},
      {"cfl", "CFL number"},
      {"horizon", "Final time of each run"},
      {"threshold", "Absolute gradient floor of the blow-up test"},
  };
  const std::pair<const char*, const char*> common[] = {
      {"out", "Output directory (default $LIFESPAN_LAB_OUT or ./lifespan_out)"},
      {"jobs", "Concurrent runs (default: hardware threads)"},
      {"seed", "Seed for all random sampling"},
  };

  for (const auto mode : {Mode::orlicz_check, Mode::testfn_check, Mode::odelab, Mode::simulate, Mode::sweep,
                          Mode::fit, Mode::report}) {
    auto* sub = app.add_subcommand(std::string(to_string(mode)));
    sub->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    for (const auto& [key, help] : common) sub->add_option(std::string("--") + key, flags[key], help);
    if (mode == Mode::report || mode == Mode::fit)
      sub->add_option("--input", flags["input"], "Directory holding the artifacts to read");
    if (mode != Mode::report && mode != Mode::orlicz_check && mode != Mode::testfn_check)
      for (const auto& [key, help] : physical) sub->add_option(std::string("--") + key, flags[key], help);
    if (mode == Mode::orlicz_check) sub->add_option("--gamma", flags["gamma"], "Extra adiabatic index to check");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const auto* sub = app.get_subcommands().front();
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    cfg.mode = mode_from_string(sub->get_name());
    for (const auto& [key, value] : flags) {
      const auto* opt = sub->get_option_no_throw("--" + key);
      if (opt && opt->count() > 0) apply_setting(cfg, key, value);
    }
    return run(cfg, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
