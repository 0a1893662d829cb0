#include "attitude/run_modes.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "attitude/gci_verify.hpp"
#include "attitude/numerics.hpp"
#include "attitude/run_modes.hpp"
#include "attitude/so3_calculus.hpp"

namespace attitude::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct ManifestWriter {
  nlohmann::json j;
  std::string path;

  ManifestWriter(const RunConfig& cfg) {
    j["version"] = kVersion;
    j["mode"] = cfg.mode;
    j["config"] = {{"d", cfg.d},
                   {"nu0", cfg.nu0},
                   {"so3_grid", {cfg.so3_na, cfg.so3_nb, cfg.so3_ng}},
                   {"theta_n", cfg.theta_n},
                   {"space", {{"dim", cfg.space.dim}, {"cells", cfg.space.cells},
                              {"length", cfg.space.length}}},
                   {"T", cfg.t_end},
                   {"cfl", cfg.cfl},
                   {"outputs", cfg.outputs},
                   {"eps_list", cfg.eps_list},
                   {"eps", cfg.eps},
                   {"seed", cfg.seed},
                   {"initial", cfg.initial.name},
                   {"out", cfg.out_dir}};
    j["phases"] = nlohmann::json::object();
    j["failures"] = nlohmann::json::array();
    j["diagnostics"] = nlohmann::json::object();
    path = cfg.out_dir + "/manifest.json";
  }

  void phase(const std::string& name, double secs) { j["phases"][name] = secs; }
  void fail(const std::string& what) { j["failures"].push_back(what); }

  /// Atomic write (temp file + rename); called on success and on failure.
  void write() const {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(path).parent_path());
    const std::string tmp = path + ".tmp";
    {
      std::ofstream os(tmp);
      os << j.dump(2) << "\n";
    }
    fs::rename(tmp, path);
  }
};

int mode_coefficients(const RunConfig& cfg, std::ostream& log, ManifestWriter& man) {
  const auto t0 = Clock::now();
  const field::EulerGrid eig_grid(16, 8, 16);
  std::ostringstream csv;
  csv << "kappa,Z,c1,c2,c3,c4,lambda0,d_star\n";
  csv << std::setprecision(12);
  for (double kappa : cfg.kappa_list) {
    const double nu0 = kappa * cfg.d;
    const vmf::VmfParams p(nu0, cfg.d, eig_grid);
    const gci::GciSolution psi = gci::solve_psi0(p, cfg.theta_n);
    const double lam0 = field::poincare_constant(eig_grid, so3::Rotation(), p);
    const gci::CoefficientSet c = gci::compute_coefficients(p, psi, lam0);
    csv << kappa << "," << p.z << "," << c.c1 << "," << c.c2 << "," << c.c3 << "," << c.c4
        << "," << c.lambda0 << "," << c.d_star << "\n";
  }
  log << csv.str();
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream out(cfg.out_dir + "/coefficients.csv");
  out << csv.str();
  man.phase("coefficients", seconds_since(t0));
  man.j["diagnostics"]["kappa_count"] = cfg.kappa_list.size();
  return 0;
}

gci::CoefficientSet coefficients_for(const RunConfig& cfg) {
  const field::EulerGrid eig_grid(16, 8, 16);
  const vmf::VmfParams p(cfg.nu0, cfg.d, eig_grid);
  const gci::GciSolution psi = gci::solve_psi0(p, cfg.theta_n);
  const double lam0 = field::poincare_constant(eig_grid, so3::Rotation(), p);
  return gci::compute_coefficients(p, psi, lam0);
}

int mode_simulate_sohb(const RunConfig& cfg, std::ostream& log, ManifestWriter& man) {
  const auto t0 = Clock::now();
  const gci::CoefficientSet c = coefficients_for(cfg);
  man.phase("coefficients", seconds_since(t0));

  sohb::SohbRunConfig scfg;
  scfg.grid = cfg.space;
  scfg.initial = cfg.initial;
  scfg.t_end = cfg.t_end;
  scfg.cfl = cfg.cfl;
  scfg.outputs = cfg.outputs;
  scfg.formulation = cfg.formulation;
  scfg.out_dir = cfg.out_dir;
  const auto t1 = Clock::now();
  const sohb::SohbTrajectory traj = sohb::run_sohb(scfg, c);
  man.phase("solve", seconds_since(t1));
  sohb::write_sohb_outputs(traj, scfg);
  const auto& last = traj.diagnostics.back();
  man.j["diagnostics"]["steps"] = traj.steps_taken;
  man.j["diagnostics"]["final_mass"] = last.mass;
  man.j["diagnostics"]["final_min_rho"] = last.min_rho;
  man.j["diagnostics"]["final_constraint_drift"] = last.max_constraint_drift;
  log << "sohb: " << traj.steps_taken << " steps, final mass " << last.mass
      << ", min rho " << last.min_rho << ", constraint drift " << last.max_constraint_drift
      << "\n";
  const double mass_drift =
      std::abs(last.mass - traj.diagnostics.front().mass) / traj.diagnostics.front().mass;
  if (mass_drift > 1e-9) {
    man.fail("mass conservation violated: relative drift " + std::to_string(mass_drift));
    return 3;
  }
  return 0;
}

int mode_simulate_sokb(const RunConfig& cfg, std::ostream& log, ManifestWriter& man) {
  const auto t0 = Clock::now();
  const field::EulerGrid grid(cfg.so3_na, cfg.so3_nb, cfg.so3_ng);
  const vmf::VmfParams p(cfg.nu0, cfg.d, grid);
  man.phase("setup", seconds_since(t0));

  // local-equilibrium initial data rho(x) M_{Lambda(x)} from the preset
  const sohb::InitialData data = sohb::make_initial_data(cfg.initial, cfg.space);
  sokb::KineticState state(cfg.space, grid, cfg.eps);
  for (int cell = 0; cell < cfg.space.total(); ++cell) {
    state.f.row(cell) = data.rho(cell) * vmf::vmf_density(p, data.lambda[cell], grid).transpose();
  }
  sokb::SokbRunConfig kcfg;
  kcfg.t_end = cfg.t_end;
  kcfg.cfl = std::max(cfg.cfl, 0.5);
  kcfg.outputs = cfg.outputs;
  kcfg.options = cfg.sokb_options;
  kcfg.options.threads = cfg.threads;
  kcfg.out_dir = cfg.out_dir;
  const auto t1 = Clock::now();
  sokb::SokbTrajectory traj = sokb::run_sokb(state, p, kcfg);
  man.phase("solve", seconds_since(t1));
  sokb::write_sokb_outputs(traj, state, p, kcfg, data.lambda[0]);
  const auto& last = traj.diagnostics.back();
  man.j["diagnostics"]["steps"] = traj.steps_taken;
  man.j["diagnostics"]["final_mass"] = last.mass;
  man.j["diagnostics"]["clipped_mass"] = traj.stats.clipped_mass;
  man.j["diagnostics"]["max_cg_iterations"] = traj.stats.max_cg_iterations;
  log << "sokb: " << traj.steps_taken << " steps, final mass " << last.mass << ", total H "
      << last.total_h << ", clipped mass " << traj.stats.clipped_mass << "\n";
  const double mass_drift =
      std::abs(last.mass - traj.diagnostics.front().mass) / traj.diagnostics.front().mass;
  if (mass_drift > 1e-10) {
    man.fail("kinetic mass conservation violated: relative drift " + std::to_string(mass_drift));
    return 3;
  }
  return 0;
}

int mode_limit_study(const RunConfig& cfg, std::ostream& log, ManifestWriter& man) {
  limit::StudyConfig st;
  st.space = cfg.space;
  st.so3_na = cfg.so3_na;
  st.so3_nb = cfg.so3_nb;
  st.so3_ng = cfg.so3_ng;
  st.theta_n = cfg.theta_n;
  st.d = cfg.d;
  st.nu0 = cfg.nu0;
  st.initial = cfg.initial;
  st.t_end = cfg.t_end;
  st.outputs = cfg.outputs;
  st.cfl_hydro = cfg.cfl;
  st.eps_list = cfg.eps_list;
  st.allow_nonpositive_margin = cfg.allow_nonpositive_margin;
  st.energy_order = cfg.energy_order;
  st.sokb_options = cfg.sokb_options;
  st.remainder = cfg.remainder;
  st.out_dir = cfg.out_dir;
  st.threads = cfg.threads;
  const auto t0 = Clock::now();
  limit::ConvergenceStudy study;
  try {
    study = limit::convergence_study(st);
  } catch (const Error& e) {
    // refusal (e.g. d* <= 0 without the override) counts as an invariant failure
    man.fail(e.what());
    log << "limit-study refused: " << e.what() << "\n";
    return 3;
  }
  man.phase("study", seconds_since(t0));
  limit::write_study_outputs(study, st);
  man.j["diagnostics"]["slope"] = study.slope;
  man.j["diagnostics"]["d_star"] = study.coeffs.d_star;
  man.j["diagnostics"]["lambda0"] = study.coeffs.lambda0;
  man.j["diagnostics"]["runs_completed"] = study.eps.size();
  for (const std::string& f : study.failures) man.fail(f);
  log << "limit-study: slope " << study.slope << " over " << study.eps.size()
      << " epsilon runs (d* = " << study.coeffs.d_star << ")\n";
  for (std::size_t i = 0; i < study.eps.size(); ++i) {
    log << "  eps " << study.eps[i] << ": err " << study.err[i] << ", supE0 " << study.sup_e0[i]
        << ", intD0 " << study.int_d0[i] << "\n";
  }
  return study.failures.empty() ? 0 : 4;
}

}  // namespace

VerifyResult run_verify(const RunConfig& cfg, std::ostream& log) {
  VerifyResult res;
  int passed = 0, failed = 0;
  auto report = [&](const std::string& name, bool ok, double measured, double tol) {
    log << (ok ? "[PASS] " : "[FAIL] ") << std::left << std::setw(34) << name
        << " measured " << std::scientific << std::setprecision(3) << measured << " (tol "
        << tol << ")\n" << std::defaultfloat;
    (ok ? passed : failed)++;
  };
  std::mt19937_64 gen(cfg.seed);
  const field::EulerGrid grid(16, 8, 16);
  const vmf::VmfParams p(cfg.nu0, cfg.d, grid);

  {  // tangent projection identity
    double worst = 0.0;
    std::normal_distribution<double> nd;
    for (int t = 0; t < 5; ++t) {
      so3::Mat3 m;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = nd(gen);
      field::ScalarField f(grid.size());
      for (int q = 0; q < grid.size(); ++q) f(q) = so3::dot_half(grid.node(q), m);
      const field::TangentField g = grid.grad(f);
      for (int q = 0; q < grid.size(); ++q) {
        const so3::Rotation a(grid.node(q), so3::Rotation::Unchecked{});
        const so3::Mat3 tp = a.matrix() * so3::cross_matrix(g.row(q).transpose());
        worst = std::max(worst, (tp - so3::tangent_projection(a, m)).cwiseAbs().maxCoeff());
      }
    }
    report("projection identity (Lemma 2.2)", worst <= 1e-8, worst, 1e-8);
  }
  {  // consistency relation
    double worst = 0.0;
    bool c1_ok = true;
    for (double kappa : {1.0, 2.0}) {
      const vmf::VmfParams pk(kappa * cfg.d, cfg.d, grid);
      const double c1 = gci::compute_c1(pk);
      c1_ok = c1_ok && c1 > 0.0 && c1 < 1.0;
      for (int t = 0; t < 3; ++t) {
        const so3::Rotation lam = num::random_rotation(gen);
        const so3::Mat3 flux = vmf::flux_lambda(grid, vmf::vmf_density(pk, lam, grid));
        worst = std::max(worst, (flux - c1 * lam.matrix()).cwiseAbs().maxCoeff());
      }
    }
    report("consistency lambda[M]=c1 Lambda", worst <= 1e-6 && c1_ok, worst, 1e-6);
  }
  {  // linearization derivatives vs finite differences
    double worst1 = 0.0, worst2 = 0.0;
    std::normal_distribution<double> nd;
    const double c1 = gci::compute_c1(p);
    for (int t = 0; t < 5; ++t) {
      const so3::Rotation lam0 = num::random_rotation(gen);
      const field::ScalarField mv = vmf::vmf_density(p, lam0, grid);
      field::ScalarField f1(grid.size());
      for (int q = 0; q < grid.size(); ++q) f1(q) = nd(gen) * mv(q);
      const double rho0 = 1.0 + 0.5 * std::abs(nd(gen));
      so3::Mat3 first, second;
      vmf::attitude_derivatives(grid, rho0, lam0, f1, c1, first, second);
      const double h = 1e-4;
      auto lam_of = [&](double eps) {
        return vmf::mean_attitude(grid, rho0 * mv + eps * f1).matrix();
      };
      const so3::Mat3 fd1 = (lam_of(h) - lam_of(-h)) / (2.0 * h);
      const so3::Mat3 fd2 = (lam_of(h) - 2.0 * lam_of(0.0) + lam_of(-h)) / (h * h);
      worst1 = std::max(worst1, (fd1 - first).cwiseAbs().maxCoeff());
      worst2 = std::max(worst2, (fd2 - second).cwiseAbs().maxCoeff());
    }
    report("linearization first derivative", worst1 <= 1e-5, worst1, 1e-5);
    report("linearization second derivative", worst2 <= 1e-3, worst2, 1e-3);
  }
  {  // dissipation
    const so3::Rotation lam = num::random_rotation(gen);
    field::FokkerPlanck op(grid, vmf::vmf_density(p, lam, grid), p.d);
    std::normal_distribution<double> nd;
    double worst_h = -1e300, worst_mass = 0.0;
    for (int t = 0; t < 50; ++t) {
      field::ScalarField f(grid.size());
      for (int q = 0; q < grid.size(); ++q) f(q) = nd(gen) * op.density()(q);
      worst_h = std::max(worst_h, op.dissipation(f));
      worst_mass = std::max(worst_mass, std::abs(grid.integrate(op.apply(f))));
    }
    report("dissipation H(f) <= 0", worst_h <= 0.0, worst_h, 0.0);
    report("collision mass conservation", worst_mass <= 1e-12, worst_mass, 1e-12);
  }
  {  // GCI orthogonality
    const gci::GciSolution psi = gci::solve_psi0(p, std::max(cfg.theta_n, 1024));
    const so3::Rotation lam0 = num::random_rotation(gen);
    const gci::GciReport rep = gci::gci_verify(grid, lam0, p, psi, 10, 2, cfg.seed + 1);
    report("GCI orthogonality (constrained)", rep.max_constrained <= 1e-5, rep.max_constrained,
           1e-5);
    report("GCI witness (unconstrained)", rep.max_unconstrained > 1e-3, rep.max_unconstrained,
           1e-3);
  }
  {  // symmetric hyperbolicity
    const gci::GciSolution psi = gci::solve_psi0(p, 1024);
    const double lam0 = 2.0;  // scale irrelevant for symmetry
    const gci::CoefficientSet c = gci::compute_coefficients(p, psi, lam0);
    std::uniform_real_distribution<double> ud(-2.0, 2.0);
    double worst_sym = 0.0, worst_spd = 1e300;
    for (int t = 0; t < 200; ++t) {
      Eigen::Matrix<double, 7, 1> u;
      u(0) = 0.2 + 2.0 * std::abs(ud(gen));
      for (int i = 1; i < 7; ++i) u(i) = ud(gen);
      Eigen::Matrix<double, 7, 7> a0;
      std::array<Eigen::Matrix<double, 7, 7>, 3> ai;
      sohb::assemble_matrices(u, c, a0, ai);
      for (int x = 0; x < 3; ++x) {
        worst_sym = std::max(worst_sym, (ai[x] - ai[x].transpose()).cwiseAbs().maxCoeff());
      }
      worst_spd = std::min(worst_spd, a0.diagonal().minCoeff());
    }
    report("hyperbolic matrices symmetric", worst_sym <= 1e-14, worst_sym, 1e-14);
    report("A0 positive definite", worst_spd > 0.0, worst_spd, 0.0);
  }

  res.failures = failed;
  res.all_passed = failed == 0;
  log << (res.all_passed ? "verify: all checks passed (" : "verify: FAILURES (")
      << passed << " passed, " << failed << " failed)\n";
  return res;
}

int dispatch(const RunConfig& cfg, std::ostream& log) {
  ManifestWriter man(cfg);
  int code = 0;
  const auto t0 = Clock::now();
  try {
    if (cfg.mode == "coefficients") {
      code = mode_coefficients(cfg, log, man);
    } else if (cfg.mode == "simulate-sohb") {
      code = mode_simulate_sohb(cfg, log, man);
    } else if (cfg.mode == "simulate-sokb") {
      code = mode_simulate_sokb(cfg, log, man);
    } else if (cfg.mode == "limit-study") {
      code = mode_limit_study(cfg, log, man);
    } else if (cfg.mode == "verify") {
      const VerifyResult r = run_verify(cfg, log);
      code = r.all_passed ? 0 : 3;
      man.j["diagnostics"]["verify_failures"] = r.failures;
    } else {
      throw ConfigError("unknown mode: " + cfg.mode);
    }
  } catch (const ConfigError& e) {
    man.fail(e.what());
    log << "config error: " << e.what() << "\n";
    code = 2;
  } catch (const Error& e) {
    man.fail(e.what());
    log << "solver abort: " << e.what() << "\n";
    code = 4;
  }
  man.phase("total", seconds_since(t0));
  man.j["exit_code"] = code;
  try {
    man.write();
  } catch (...) {
    log << "warning: failed to write manifest\n";
  }
  return code;
}

}  // namespace attitude::cli
