// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code = number of failed
// criteria.
//
// Criterion 9's setup clause "d chosen so d* > 0" is mathematically
// unattainable (the positivity requirement c1 lambda0 / kappa > 25 * 3^(1/4)
// fails for every parameter pair by a factor ~100; see the decisions ledger).
// The run therefore uses the explicit override, reports the measured margin,
// and the criterion's measurable assertions (slope and uniform bounds) are
// evaluated at full strength.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "attitude/gci_verify.hpp"
#include "attitude/limit.hpp"
#include "attitude/numerics.hpp"

using namespace attitude;
using field::EulerGrid;
using field::ScalarField;
using so3::Mat3;
using so3::Rotation;
using so3::Vec3;

namespace {

int g_failures = 0;
using Clock = std::chrono::steady_clock;

struct Criterion {
  int id;
  Clock::time_point t0 = Clock::now();
  bool ok = true;
  std::string detail;

  explicit Criterion(int id_) : id(id_) {}
  void check(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void done(const std::string& summary) {
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n", ok ? "PASS" : "FAIL", id,
                summary.c_str(), secs, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

int main() {
  std::mt19937_64 gen(987654321);
  std::normal_distribution<double> nd;

  const EulerGrid grid(24, 12, 24);  // default resolution
  const double d_ref = 1.0, nu_ref = 1.0;
  const vmf::VmfParams params(nu_ref, d_ref, grid);

  // ---- 1. projection identity ----
  {
    Criterion c(1);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      Mat3 m;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = nd(gen);
      ScalarField f(grid.size());
      for (int q = 0; q < grid.size(); ++q) f(q) = so3::dot_half(grid.node(q), m);
      const field::TangentField v = grid.grad(f);
      for (int q = 0; q < grid.size(); ++q) {
        const Rotation a(grid.node(q), Rotation::Unchecked{});
        const Mat3 tangent = a.matrix() * so3::cross_matrix(v.row(q).transpose());
        worst = std::max(worst, (tangent - so3::tangent_projection(a, m)).cwiseAbs().maxCoeff());
      }
    }
    c.check(worst <= 1e-8, "nodewise mismatch " + fmt(worst));
    c.done("projection identity, 20 random M, max error " + fmt(worst) + " <= 1e-8");
  }

  // ---- 2. consistency relation ----
  {
    Criterion c(2);
    double worst = 0.0, worst_c1 = 1.0;
    for (double kappa : {0.5, 1.0, 2.0, 4.0}) {
      const vmf::VmfParams pk(kappa * d_ref, d_ref, grid);
      const double c1 = gci::compute_c1(pk);
      c.check(c1 > 0.0 && c1 < 1.0, "c1 out of (0,1) at kappa " + fmt(kappa));
      worst_c1 = std::min(worst_c1, std::min(c1, 1.0 - c1));
      for (int t = 0; t < 10; ++t) {
        const Rotation lam = num::random_rotation(gen);
        const Mat3 flux = vmf::flux_lambda(grid, vmf::vmf_density(pk, lam, grid));
        worst = std::max(worst, (flux - c1 * lam.matrix()).cwiseAbs().maxCoeff());
      }
    }
    c.check(worst <= 1e-6, "flux mismatch " + fmt(worst));
    c.done("consistency lambda[M] = c1 Lambda, 4 kappas x 10 rotations, max error " +
           fmt(worst) + " <= 1e-6");
  }

  // ---- 3. linearization derivatives ----
  {
    Criterion c(3);
    double worst1 = 0.0, worst2 = 0.0;
    const double c1 = gci::compute_c1(params);
    for (int t = 0; t < 20; ++t) {
      const Rotation lam0 = num::random_rotation(gen);
      const ScalarField mv = vmf::vmf_density(params, lam0, grid);
      ScalarField f1(grid.size());
      for (int q = 0; q < grid.size(); ++q) f1(q) = nd(gen) * mv(q);
      const double rho0 = 0.8 + 0.6 * std::abs(nd(gen));
      Mat3 first, second;
      vmf::attitude_derivatives(grid, rho0, lam0, f1, c1, first, second);
      const double h = 1e-4;
      auto lam_of = [&](double eps) {
        return vmf::mean_attitude(grid, rho0 * mv + eps * f1).matrix();
      };
      const Mat3 fd1 = (lam_of(h) - lam_of(-h)) / (2.0 * h);
      const Mat3 fd2 = (lam_of(h) - 2.0 * lam_of(0.0) + lam_of(-h)) / (h * h);
      worst1 = std::max(worst1, (fd1 - first).cwiseAbs().maxCoeff());
      worst2 = std::max(worst2, (fd2 - second).cwiseAbs().maxCoeff());
    }
    c.check(worst1 <= 1e-5, "first derivative error " + fmt(worst1));
    c.check(worst2 <= 1e-3, "second derivative error " + fmt(worst2));
    c.done("linearization vs finite differences, 20 random f1: first " + fmt(worst1) +
           " <= 1e-5, second " + fmt(worst2) + " <= 1e-3");
  }

  // ---- 4. dissipation ----
  {
    Criterion c(4);
    const Rotation lam = num::random_rotation(gen);
    field::FokkerPlanck op(grid, vmf::vmf_density(params, lam, grid), params.d);
    double worst_h = -1e300, worst_mass = 0.0, strict = 0.0;
    for (int t = 0; t < 200; ++t) {
      ScalarField f(grid.size());
      for (int q = 0; q < grid.size(); ++q) f(q) = nd(gen) * op.density()(q);
      const double h = op.dissipation(f);
      worst_h = std::max(worst_h, h);
      strict = std::max(strict, h);  // must stay well below -1e-10
      worst_mass = std::max(worst_mass, std::abs(grid.integrate(op.apply(f))));
    }
    const double h_eq = std::abs(op.dissipation(ScalarField(2.0 * op.density())));
    c.check(worst_h <= 0.0, "positive H " + fmt(worst_h));
    c.check(strict < -1e-10, "random field H not strictly negative");
    c.check(h_eq <= 1e-10, "equilibrium H " + fmt(h_eq));
    c.check(worst_mass <= 1e-12, "mass of L f " + fmt(worst_mass));
    c.done("dissipation, 200 random fields: max H " + fmt(worst_h) + " <= 0, |H(cM)| " +
           fmt(h_eq) + " <= 1e-10, mass " + fmt(worst_mass) + " <= 1e-12");
  }

  // ---- 5. GCI orthogonality (with the BVP solve gates) ----
  {
    Criterion c(5);
    const gci::GciSolution psi = gci::solve_psi0(params, 4096);
    c.check(psi.residual_norm() <= 1e-6, "BVP residual " + fmt(psi.residual_norm()));
    const double e1 = gci::solve_psi0(params, 128).convergence_sup();
    const double e2 = gci::solve_psi0(params, 256).convergence_sup();
    const double order = std::log2(e1 / e2);
    c.check(order > 1.7 && order < 2.3, "BVP self-convergence order " + fmt(order));
    const Rotation lam0 = num::random_rotation(gen);
    const gci::GciReport rep = gci::gci_verify(grid, lam0, params, psi, 50, 3, 424242);
    c.check(rep.max_constrained <= 1e-5, "constrained residual " + fmt(rep.max_constrained));
    c.check(rep.max_unconstrained > 1e-3, "witness too small " + fmt(rep.max_unconstrained));
    c.done("GCI orthogonality, 50 fields x 3 P: constrained " + fmt(rep.max_constrained) +
           " <= 1e-5, witness " + fmt(rep.max_unconstrained) + " > 1e-3, BVP order " +
           fmt(order));
  }

  // shared coefficient set for the hyperbolic criteria
  const gci::GciSolution psi_ref = gci::solve_psi0(params, 8192);
  const field::EulerGrid eig_grid(16, 8, 16);
  const double lambda0 = field::poincare_constant(eig_grid, Rotation(), params);
  const gci::CoefficientSet coeffs = gci::compute_coefficients(params, psi_ref, lambda0);

  // ---- 6. symmetric hyperbolicity ----
  {
    Criterion c(6);
    std::uniform_real_distribution<double> ud(-2.0, 2.0);
    double worst_sym = 0.0, min_diag = 1e300;
    for (int t = 0; t < 1000; ++t) {
      Eigen::Matrix<double, 7, 1> u;
      u(0) = 0.1 + 2.0 * std::abs(ud(gen));
      for (int i = 1; i < 7; ++i) u(i) = ud(gen);
      Eigen::Matrix<double, 7, 7> a0;
      std::array<Eigen::Matrix<double, 7, 7>, 3> ai;
      sohb::assemble_matrices(u, coeffs, a0, ai);
      for (int x = 0; x < 3; ++x) {
        worst_sym = std::max(worst_sym, (ai[x] - ai[x].transpose()).cwiseAbs().maxCoeff());
      }
      min_diag = std::min(min_diag, a0.diagonal().minCoeff());
    }
    c.check(worst_sym <= 1e-14, "asymmetry " + fmt(worst_sym));
    c.check(min_diag > 0.0, "A0 not SPD");
    c.done("symmetric hyperbolicity, 1000 states: asymmetry " + fmt(worst_sym) +
           " <= 1e-14, min A0 diag " + fmt(min_diag) + " > 0");
  }

  // ---- 7. constraint transport ----
  {
    Criterion c(7);
    sohb::InitialPreset preset;
    preset.name = "twist-lambda";
    preset.amp_rho = 0.2;
    preset.amp_twist = 0.5;
    auto run_pair = [&](int cells) {
      sohb::SohbRunConfig cfg;
      cfg.grid = sohb::SpatialGrid(1, cells, 2.0 * M_PI);
      cfg.initial = preset;
      cfg.t_end = 0.5;
      cfg.outputs = 1;
      cfg.formulation = "frame";
      const auto frame = sohb::run_sohb(cfg, coeffs);
      cfg.formulation = "stereo";
      const auto stereo = sohb::run_sohb(cfg, coeffs);
      double l2 = 0.0;
      for (int i = 0; i < cells; ++i) {
        l2 += std::pow(frame.rho.back()(i) - stereo.rho.back()(i), 2);
        l2 += (frame.lambda.back()[i] - stereo.lambda.back()[i]).squaredNorm();
      }
      return std::make_pair(frame.diagnostics.back().max_constraint_drift,
                            std::sqrt(l2 / cells));
    };
    const auto [d1, x1] = run_pair(64);
    const auto [d2, x2] = run_pair(128);
    const auto [d3, x3] = run_pair(256);
    const double drift_order = 0.5 * (std::log2(d1 / d2) + std::log2(d2 / d3));
    const double agree_order = 0.5 * (std::log2(x1 / x2) + std::log2(x2 / x3));
    c.check(drift_order >= 1.0, "drift order " + fmt(drift_order));
    c.check(agree_order >= 1.0, "two-formulation order " + fmt(agree_order));
    c.done("constraint transport at T=0.5: drift order " + fmt(drift_order) +
           " >= 1, stereo-vs-frame order " + fmt(agree_order) + " >= 1 (drifts " + fmt(d1) +
           " -> " + fmt(d3) + ")");
  }

  // ---- 8. kinetic relaxation ----
  {
    Criterion c(8);
    const vmf::VmfParams p8(2.0, 1.0, grid);
    const sohb::SpatialGrid space(1, 16, 2.0 * M_PI);
    sokb::KineticState s(space, grid, 0.1);
    const Rotation lam_init = num::random_rotation(gen);
    const ScalarField mv = vmf::vmf_density(p8, lam_init, grid);
    ScalarField prof(grid.size());
    for (int q = 0; q < grid.size(); ++q) prof(q) = mv(q) * (1.0 + 0.5 * std::tanh(nd(gen)));
    for (int cell = 0; cell < space.total(); ++cell) s.f.row(cell) = prof;  // space-homogeneous
    sokb::SokbRunConfig cfg;
    cfg.t_end = 1.0;
    cfg.outputs = 4;
    const sokb::SokbTrajectory traj = sokb::run_sokb(s, p8, cfg);
    const double m0 = traj.diagnostics.front().mass;
    double mass_err = 0.0;
    for (const auto& row : traj.diagnostics) mass_err = std::max(mass_err, std::abs(row.mass - m0));
    const double final_dist = traj.diagnostics.back().max_equilibrium_distance;
    c.check(final_dist < 1e-6, "terminal distance " + fmt(final_dist));
    c.check(mass_err <= 1e-12 * m0, "mass drift " + fmt(mass_err / m0));

    // stiff stability: eps = 1e-3 with dt = dx
    sokb::KineticState st(space, grid, 1e-3);
    for (int cell = 0; cell < space.total(); ++cell) {
      st.f.row(cell) = (1.0 + 0.3 * std::sin(space.x(cell))) * mv.transpose();
    }
    sokb::SokbOptions opt;
    double m_st = 0.0;
    for (int cell = 0; cell < space.total(); ++cell)
      m_st += grid.integrate(st.f.row(cell)) * space.dx();
    for (int k = 0; k < 5; ++k) {
      sokb::transport_step(st, 0.5 * space.dx());
      sokb::collision_step(st, p8, space.dx(), opt, 1e-10);
      sokb::transport_step(st, 0.5 * space.dx());
    }
    double m_end = 0.0;
    for (int cell = 0; cell < space.total(); ++cell)
      m_end += grid.integrate(st.f.row(cell)) * space.dx();
    c.check(st.f.allFinite() && st.f.maxCoeff() < 1e3, "stiff run blew up");
    c.check(std::abs(m_end - m_st) <= 1e-10 * m_st, "stiff mass drift " + fmt((m_end - m_st) / m_st));
    c.done("kinetic relaxation: terminal distance " + fmt(final_dist) +
           " < 1e-6, mass drift " + fmt(mass_err / m0) + " <= 1e-12, stiff eps=1e-3 stable");
  }

  // ---- 9. hydrodynamic limit ----
  {
    Criterion c(9);
    // the d* > 0 setup clause is unattainable; report the analysis and override
    const double required = 25.0 * std::pow(3.0, 0.25);
    const double ratio = coeffs.c1 * coeffs.lambda0 / params.kappa;
    std::printf(
        "[NOTE] criterion 9 setup clause 'd chosen so d* > 0' is unattainable: it needs "
        "c1*lambda0/kappa > %.2f but the measured maximum over kappa is ~1/3 (here %.3f at "
        "kappa=1); d* = %.3f for every d at this kappa. Paper hypothesis vacuous; see the "
        "decisions ledger. Running under the explicit override.\n",
        required, ratio, coeffs.d_star);
    limit::StudyConfig cfg;
    cfg.space = sohb::SpatialGrid(1, 64, 2.0 * M_PI);
    cfg.so3_na = 24;
    cfg.so3_nb = 12;
    cfg.so3_ng = 24;
    cfg.theta_n = 4096;
    cfg.d = d_ref;
    cfg.nu0 = nu_ref;
    cfg.initial.name = "twist-lambda";
    cfg.initial.amp_rho = 0.2;
    cfg.initial.k_rho = 1;
    cfg.initial.amp_twist = 0.5;
    cfg.initial.k_twist = 1;
    cfg.t_end = 0.3;
    cfg.outputs = 6;
    cfg.eps_list = {0.2, 0.1, 0.05, 0.025};
    cfg.allow_nonpositive_margin = true;
    const limit::ConvergenceStudy study = limit::convergence_study(cfg);
    c.check(study.eps.size() == 4, "runs failed: " + std::to_string(study.failures.size()));
    c.check(study.slope >= 0.8 && study.slope <= 1.2, "slope " + fmt(study.slope));
    if (!study.sup_e0.empty()) {
      const auto [emin, emax] = std::minmax_element(study.sup_e0.begin(), study.sup_e0.end());
      const auto [dmin, dmax] = std::minmax_element(study.int_d0.begin(), study.int_d0.end());
      c.check(*emax / std::max(*emin, 1e-300) <= 3.0, "supE0 ratio " + fmt(*emax / *emin));
      c.check(*dmax / std::max(*dmin, 1e-300) <= 3.0, "intD0 ratio " + fmt(*dmax / *dmin));
      std::string detail = "errs:";
      for (std::size_t i = 0; i < study.eps.size(); ++i) detail += " " + fmt(study.err[i]);
      std::printf("[INFO] criterion 9 data -- %s; supE0 ratio %.2f; intD0 ratio %.2f\n",
                  detail.c_str(), *emax / *emin, *dmax / *dmin);
    }
    c.done("hydrodynamic limit: fitted slope " + fmt(study.slope) +
           " in [0.8, 1.2]; uniform bounds ratio <= 3 (d* clause: see NOTE)");
  }

  // ---- 10. corrector solvability ----
  {
    Criterion c(10);
    sohb::InitialPreset preset;
    preset.name = "twist-lambda";
    preset.amp_rho = 0.3;
    preset.amp_twist = 0.5;
    const sohb::SpatialGrid space(1, 64, 2.0 * M_PI);
    const sohb::InitialData data = sohb::make_initial_data(preset, space);
    std::vector<Mat3> lam;
    for (const auto& r : data.lambda) lam.push_back(r.matrix());
    const limit::MacroState mac = limit::MacroState::from_fields(space, data.rho, lam, coeffs);
    const limit::ExpansionTerms terms = limit::solve_f1(mac, coeffs, params, grid);
    c.check(terms.max_linear_residual <= 1e-9,
            "linear residual " + fmt(terms.max_linear_residual));
    c.check(terms.max_constraint_residual <= 1e-8,
            "constraint residual " + fmt(terms.max_constraint_residual));
    bool raised = false;
    try {
      gci::CoefficientSet bad = coeffs;
      bad.c1 *= 1.1;
      const sohb::SpatialGrid small(1, 16, 2.0 * M_PI);
      const sohb::InitialData data2 = sohb::make_initial_data(preset, small);
      std::vector<Mat3> lam2;
      for (const auto& r : data2.lambda) lam2.push_back(r.matrix());
      const limit::MacroState mbad = limit::MacroState::from_fields(small, data2.rho, lam2, bad);
      limit::solve_f1(mbad, coeffs, params, grid);
    } catch (const InconsistentRHS&) {
      raised = true;
    }
    c.check(raised, "perturbed witness not detected");
    c.done("corrector solvability: residual " + fmt(terms.max_linear_residual) +
           " <= 1e-9, constraints " + fmt(terms.max_constraint_residual) +
           " <= 1e-8, InconsistentRHS raised on the c1-perturbed witness");
  }

  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return g_failures;
}
