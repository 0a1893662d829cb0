#pragma once

// Run configuration: INI-style sections of key = value lines, '#' comments.
// Unknown sections or keys are rejected with the offending line identified.

#include <cstdint>
#include <string>
#include <vector>

#include "attitude/limit.hpp"

namespace attitude::cli {

struct RunConfig {
  std::string mode;  // coefficients | simulate-sohb | simulate-sokb | limit-study | verify

  // physics
  double d = 1.0;
  double nu0 = 1.0;

  // SO(3) grid
  int so3_na = 24, so3_nb = 12, so3_ng = 24;
  int theta_n = 4096;

  // space / time
  sohb::SpatialGrid space{1, 64, 2.0 * M_PI};
  double t_end = 0.5;
  double cfl = 0.4;
  int outputs = 10;

  // epsilon sweep
  std::vector<double> eps_list{0.2, 0.1, 0.05, 0.025};
  double eps = 0.1;  // single-run kinetic epsilon
  bool allow_nonpositive_margin = false;

  // coefficients table
  std::vector<double> kappa_list{0.25, 0.5, 1.0, 2.0, 4.0};

  sohb::InitialPreset initial;
  std::string formulation = "stereo";
  limit::RemainderPreset remainder;
  sokb::SokbOptions sokb_options;
  int energy_order = 0;

  std::string out_dir = "out";
  std::uint64_t seed = 20240901;
  int threads = 0;
  int sweep_parallel = 1;
};

/// Parses and validates; fills defaults; rejects unknown keys.
RunConfig parse_config(const std::string& path);

/// Parses from an already-loaded string (used by tests).
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<memory>");

}  // namespace attitude::cli
