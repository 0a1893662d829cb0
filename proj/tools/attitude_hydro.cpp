// Command-line entry point.
//
//   attitude_hydro <mode> --config <path> [--out <dir>] [--parallel <n>]
//
// Modes: coefficients, simulate-sohb, simulate-sokb, limit-study, verify.
// Exit codes: 0 success, 2 config error, 3 numerical-invariant failure,
// 4 solver abort.

#include <CLI11.hpp>

#include <iostream>

#include "attitude/run_modes.hpp"

int main(int argc, char** argv) {
  CLI::App app{std::string(attitude::cli::kVersion) +
               " - kinetic/hydrodynamic attitude-coordination suite"};
  std::string mode, config_path, out_dir;
  int parallel = 0;
  app.add_option("mode", mode,
                 "coefficients | simulate-sohb | simulate-sokb | limit-study | verify")
      ->required();
  app.add_option("--config", config_path, "configuration file (key = value sections)");
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--parallel", parallel, "worker threads (overrides config/env)");
  CLI11_PARSE(app, argc, argv);

  attitude::cli::RunConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = attitude::cli::parse_config(config_path);
      if (cfg.mode != mode) {
        // the command-line mode wins; config mode is a default
        cfg.mode = mode;
      }
    } else {
      if (mode != "verify" && mode != "coefficients") {
        std::cerr << "config error: --config is required for mode '" << mode << "'\n";
        return 2;
      }
      cfg.mode = mode;
    }
  } catch (const attitude::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (parallel > 0) cfg.threads = parallel;

  return attitude::cli::dispatch(cfg, std::cout);
}
