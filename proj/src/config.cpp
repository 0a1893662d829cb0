#include "attitude/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace attitude::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw ConfigError("line " + std::to_string(line) + ": expected a number, got '" + v + "'");
  }
}

int to_int(const std::string& v, int line) {
  const double x = to_double(v, line);
  if (x != std::floor(x)) {
    throw ConfigError("line " + std::to_string(line) + ": expected an integer, got '" + v + "'");
  }
  return static_cast<int>(x);
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("line " + std::to_string(line) + ": expected a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& v, int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(item, line));
  }
  if (out.empty()) throw ConfigError("line " + std::to_string(line) + ": empty list");
  return out;
}

so3::Vec3 to_vec3(const std::string& v, int line) {
  const std::vector<double> xs = to_list(v, line);
  if (xs.size() != 3) {
    throw ConfigError("line " + std::to_string(line) + ": expected three components");
  }
  return so3::Vec3(xs[0], xs[1], xs[2]);
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  int space_dim = cfg.space.dim, space_cells = cfg.space.cells;
  double space_length = cfg.space.length;

  std::istringstream is(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(origin + " line " + std::to_string(line) + ": bad section header");
      section = trim(s.substr(1, s.size() - 2));
      static const std::vector<std::string> known = {"run",  "physics", "so3grid", "theta",
                                                     "space", "time",    "epsilons", "initial",
                                                     "sokb", "coefficients"};
      if (std::find(known.begin(), known.end(), section) == known.end()) {
        throw ConfigError(origin + " line " + std::to_string(line) + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + " line " + std::to_string(line) + ": expected key = value");
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    auto unknown = [&]() {
      throw ConfigError(origin + " line " + std::to_string(line) + ": unknown key '" + key +
                        "' in section [" + section + "]");
    };

    if (section == "run") {
      if (key == "mode") cfg.mode = val;
      else if (key == "out") cfg.out_dir = val;
      else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_double(val, line));
      else if (key == "threads") cfg.threads = to_int(val, line);
      else if (key == "sweep_parallel") cfg.sweep_parallel = to_int(val, line);
      else unknown();
    } else if (section == "physics") {
      if (key == "d") cfg.d = to_double(val, line);
      else if (key == "nu0") cfg.nu0 = to_double(val, line);
      else unknown();
    } else if (section == "so3grid") {
      if (key == "n_alpha") cfg.so3_na = to_int(val, line);
      else if (key == "n_beta") cfg.so3_nb = to_int(val, line);
      else if (key == "n_gamma") cfg.so3_ng = to_int(val, line);
      else unknown();
    } else if (section == "theta") {
      if (key == "n") cfg.theta_n = to_int(val, line);
      else unknown();
    } else if (section == "space") {
      if (key == "dim") space_dim = to_int(val, line);
      else if (key == "cells") space_cells = to_int(val, line);
      else if (key == "length") space_length = to_double(val, line);
      else unknown();
    } else if (section == "time") {
      if (key == "T") cfg.t_end = to_double(val, line);
      else if (key == "cfl") cfg.cfl = to_double(val, line);
      else if (key == "outputs") cfg.outputs = to_int(val, line);
      else unknown();
    } else if (section == "epsilons") {
      if (key == "list") cfg.eps_list = to_list(val, line);
      else if (key == "eps") cfg.eps = to_double(val, line);
      else if (key == "allow_nonpositive_margin") cfg.allow_nonpositive_margin = to_bool(val, line);
      else unknown();
    } else if (section == "initial") {
      if (key == "preset") cfg.initial.name = val;
      else if (key == "rho0") cfg.initial.rho0 = to_double(val, line);
      else if (key == "amp_rho") cfg.initial.amp_rho = to_double(val, line);
      else if (key == "k_rho") cfg.initial.k_rho = to_int(val, line);
      else if (key == "sigma") cfg.initial.sigma = to_double(val, line);
      else if (key == "amp_twist") cfg.initial.amp_twist = to_double(val, line);
      else if (key == "k_twist") cfg.initial.k_twist = to_int(val, line);
      else if (key == "axis") cfg.initial.axis = to_vec3(val, line).normalized();
      else if (key == "base_angles") cfg.initial.base_angles = to_vec3(val, line);
      else if (key == "formulation") cfg.formulation = val;
      else if (key == "remainder_amp") cfg.remainder.amplitude = to_double(val, line);
      else if (key == "remainder_k") cfg.remainder.wavenumber = to_int(val, line);
      else unknown();
    } else if (section == "sokb") {
      if (key == "picard_refresh") cfg.sokb_options.picard_refresh = to_bool(val, line);
      else if (key == "substeps") cfg.sokb_options.substeps = to_int(val, line);
      else if (key == "cg_tol") cfg.sokb_options.cg_tol = to_double(val, line);
      else if (key == "rho_floor_rel") cfg.sokb_options.rho_floor_rel = to_double(val, line);
      else unknown();
    } else if (section == "coefficients") {
      if (key == "kappa_list") cfg.kappa_list = to_list(val, line);
      else unknown();
    } else {
      throw ConfigError(origin + " line " + std::to_string(line) + ": key '" + key +
                        "' outside any section");
    }
  }

  // validation (an empty mode may be supplied later by the command line)
  static const std::vector<std::string> modes = {"coefficients", "simulate-sohb", "simulate-sokb",
                                                 "limit-study", "verify"};
  if (!cfg.mode.empty() && std::find(modes.begin(), modes.end(), cfg.mode) == modes.end()) {
    throw ConfigError(origin + ": field 'mode': unknown mode '" + cfg.mode + "'");
  }
  if (cfg.d <= 0.0) throw ConfigError(origin + ": field 'd': must be positive");
  if (cfg.nu0 <= 0.0) throw ConfigError(origin + ": field 'nu0': must be positive");
  if (cfg.t_end <= 0.0) throw ConfigError(origin + ": field 'T': must be positive");
  if (cfg.cfl <= 0.0 || cfg.cfl > 1.0) throw ConfigError(origin + ": field 'cfl': must be in (0,1]");
  if (cfg.outputs < 1) throw ConfigError(origin + ": field 'outputs': must be >= 1");
  if (cfg.eps <= 0.0) throw ConfigError(origin + ": field 'eps': must be positive");
  for (double e : cfg.eps_list) {
    if (e <= 0.0) throw ConfigError(origin + ": field 'list': epsilons must be positive");
  }
  for (std::size_t i = 1; i < cfg.eps_list.size(); ++i) {
    if (cfg.eps_list[i] >= cfg.eps_list[i - 1]) {
      throw ConfigError(origin + ": field 'list': epsilons must be strictly decreasing");
    }
  }
  if (cfg.mode == "limit-study" && cfg.eps_list.size() < 3) {
    throw ConfigError(origin + ": field 'list': limit-study needs >= 3 epsilons");
  }
  try {
    cfg.space = sohb::SpatialGrid(space_dim, space_cells, space_length);
  } catch (const Error& e) {
    throw ConfigError(origin + ": [space]: " + e.what());
  }
  if (cfg.so3_na < 8 || cfg.so3_ng < 8 || cfg.so3_na % 2 || cfg.so3_ng % 2 || cfg.so3_nb < 4) {
    throw ConfigError(origin + ": [so3grid]: need n_alpha, n_gamma >= 8 even and n_beta >= 4");
  }
  if (cfg.theta_n < 64) throw ConfigError(origin + ": [theta]: n must be >= 64");
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace attitude::cli
