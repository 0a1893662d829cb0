#include "attitude/limit.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "attitude/numerics.hpp"

namespace attitude::limit {

MacroState MacroState::from_fields(const SpatialGrid& g, const Eigen::VectorXd& rho,
                                   const std::vector<Mat3>& lambda, const CoefficientSet& c) {
  MacroState m;
  m.space = g;
  const int n = g.total();
  m.rho = rho;
  m.lambda.reserve(n);
  for (const Mat3& lam : lambda) m.lambda.push_back(so3::polar_decompose(lam));
  const double h = g.dx();
  m.grad_rho = Eigen::MatrixXd::Zero(n, 3);
  m.grad_lambda.assign(n, {Mat3::Zero(), Mat3::Zero(), Mat3::Zero()});
  for (int cell = 0; cell < n; ++cell) {
    for (int axis = 0; axis < g.dim; ++axis) {
      const int cm = g.neighbor(cell, axis, -1), cp = g.neighbor(cell, axis, +1);
      m.grad_rho(cell, axis) = (m.rho(cp) - m.rho(cm)) / (2.0 * h);
      // body-frame central difference through the log map: the discrete
      // gradient is exactly tangent (Lambda^T dLambda antisymmetric), which
      // the corrector's solvability identity requires
      const Mat3 lam = m.lambda[cell].matrix();
      const so3::Vec3 up = so3::log_so3(so3::Rotation(lam.transpose() * m.lambda[cp].matrix()));
      const so3::Vec3 um = so3::log_so3(so3::Rotation(lam.transpose() * m.lambda[cm].matrix()));
      m.grad_lambda[cell][axis] = lam * so3::cross_matrix((up - um) / (2.0 * h));
    }
  }
  // time derivatives from the hydrodynamic right-hand sides (frame form)
  m.drho_dt.resize(n);
  m.dlambda_dt.resize(n);
  for (int cell = 0; cell < n; ++cell) {
    const Mat3 lam = m.lambda[cell].matrix();
    const so3::Vec3 om = lam.col(0), uu = lam.col(1), vv = lam.col(2);
    double div_om = 0.0, div_u = 0.0, div_v = 0.0;
    so3::Vec3 grad_rho_v = so3::Vec3::Zero();
    for (int axis = 0; axis < g.dim; ++axis) {
      div_om += m.grad_lambda[cell][axis](axis, 0);
      div_u += m.grad_lambda[cell][axis](axis, 1);
      div_v += m.grad_lambda[cell][axis](axis, 2);
      grad_rho_v(axis) = m.grad_rho(cell, axis);
    }
    auto adv = [&](const so3::Vec3& dir, int col) {
      so3::Vec3 out = so3::Vec3::Zero();
      for (int axis = 0; axis < g.dim; ++axis) out += dir(axis) * m.grad_lambda[cell][axis].col(col);
      return out;
    };
    const so3::Vec3 r = div_om * om + div_u * uu + div_v * vv;
    const double delta = adv(om, 1).dot(vv) + adv(uu, 2).dot(om) + adv(vv, 0).dot(uu);
    const so3::Vec3 w =
        om.cross(c.c3 * grad_rho_v + c.c4 * m.rho(cell) * r) + c.c4 * m.rho(cell) * delta * om;
    Mat3 adv_lam = Mat3::Zero();
    for (int axis = 0; axis < g.dim; ++axis) adv_lam += om(axis) * m.grad_lambda[cell][axis];
    m.dlambda_dt[cell] = -c.c2 * adv_lam - so3::cross_matrix(w) * lam / m.rho(cell);
    double div_rho_om = 0.0;
    for (int axis = 0; axis < g.dim; ++axis) {
      div_rho_om += m.grad_rho(cell, axis) * om(axis) +
                    m.rho(cell) * m.grad_lambda[cell][axis](axis, 0);
    }
    m.drho_dt(cell) = -c.c1 * div_rho_om;
  }
  return m;
}

Eigen::MatrixXd build_f0(const MacroState& m, const vmf::VmfParams& p, const EulerGrid& grid) {
  const int n = m.space.total();
  Eigen::MatrixXd f0(n, grid.size());
  for (int cell = 0; cell < n; ++cell) {
    f0.row(cell) = m.rho(cell) * vmf::vmf_density(p, m.lambda[cell], grid).transpose();
  }
  return f0;
}

namespace {

/// Right side of the corrector equation at one cell, P^perp-projected; the
/// removed mean (the constant-invariant component, i.e. the continuity-
/// equation defect) is reported separately for the solvability detector.
ScalarField corrector_rhs(const MacroState& m, const vmf::VmfParams& p, const EulerGrid& grid,
                          int cell, const ScalarField& mv, double* mean_defect) {
  const int nq = grid.size();
  ScalarField b(nq);
  for (int q = 0; q < nq; ++q) {
    const Mat3& a = grid.node(q);
    // dt f0 = [dt rho + rho kappa dot_half(A, dt Lambda)] M
    double val = m.drho_dt(cell) + m.rho(cell) * p.kappa * so3::dot_half(a, m.dlambda_dt[cell]);
    // (A e1 . grad_x) f0
    for (int axis = 0; axis < m.space.dim; ++axis) {
      val += a(axis, 0) * (m.grad_rho(cell, axis) +
                           m.rho(cell) * p.kappa * so3::dot_half(a, m.grad_lambda[cell][axis]));
    }
    b(q) = val * mv(q);
  }
  const double mean = grid.integrate(b);
  if (mean_defect) *mean_defect = mean;
  b -= mean * mv;
  return b;
}

}  // namespace

ExpansionTerms solve_f1(const MacroState& m, const CoefficientSet& c, const vmf::VmfParams& p,
                        const EulerGrid& grid, const SolveF1Options& opt) {
  ExpansionTerms terms;
  const int ncells = m.space.total();
  const int nq = grid.size();
  terms.f0 = build_f0(m, p, grid);
  terms.f1.resize(ncells, nq);
  std::vector<double> lin_res(ncells), con_res(ncells), mass_res(ncells);

  const Mat3 e[3] = {so3::cross_matrix({1, 0, 0}), so3::cross_matrix({0, 1, 0}),
                     so3::cross_matrix({0, 0, 1})};

  num::parallel_for(ncells, num::resolve_threads(opt.threads), [&](int cell) {
    const ScalarField mv = vmf::vmf_density(p, m.lambda[cell], grid);
    field::FokkerPlanck op(grid, mv, p.d);
    double mean_defect = 0.0;
    const ScalarField b = corrector_rhs(m, p, grid, cell, mv, &mean_defect);
    const Eigen::VectorXd wm = grid.weights().cwiseProduct(mv);

    // constraint vectors: 1 and the three tangent fields dot(Lambda J_i, A);
    // wM-orthonormalized by Gram-Schmidt
    std::vector<ScalarField> cons;
    cons.push_back(ScalarField::Ones(nq));
    for (int i = 0; i < 3; ++i) {
      ScalarField gi(nq);
      const Mat3 le = m.lambda[cell].matrix() * e[i];
      for (int q = 0; q < nq; ++q) gi(q) = so3::dot_frobenius(le, grid.node(q));
      cons.push_back(gi);
    }
    for (std::size_t i = 0; i < cons.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        cons[i] -= wm.cwiseProduct(cons[j]).dot(cons[i]) * cons[j];
      }
      const double nn = std::sqrt(wm.cwiseProduct(cons[i]).dot(cons[i]));
      cons[i] /= nn;
    }
    // symmetrized variables y = sqrt(wM) h: S = D^{-1/2} K D^{-1/2} is plain-
    // symmetric and the constraint projector becomes orthogonal, so projected
    // CG is valid; in the h variables the projector is only wM-orthogonal and
    // "P K P" would not be symmetric
    const Eigen::VectorXd sq = wm.cwiseSqrt();
    std::vector<Eigen::VectorXd> cons_y;
    for (const ScalarField& ci : cons) cons_y.push_back(sq.cwiseProduct(ci));  // orthonormal
    auto project_y = [&](Eigen::VectorXd v) {
      for (const Eigen::VectorXd& cy : cons_y) v -= cy.dot(v) * cy;
      return v;
    };
    auto apply_s = [&](const Eigen::VectorXd& y) {
      return Eigen::VectorXd(
          op.stiffness_apply(y.cwiseQuotient(sq)).cwiseQuotient(sq));
    };
    const Eigen::VectorXd rhs =
        project_y((-grid.weights().cwiseProduct(b) / p.d).cwiseQuotient(sq));
    Eigen::VectorXd y = Eigen::VectorXd::Zero(nq);
    {
      const double nb0 = rhs.norm();
      Eigen::VectorXd r = rhs;  // y0 = 0
      Eigen::VectorXd pk = r;
      double rr = r.squaredNorm();
      for (int it = 0; it < opt.cg_maxit && nb0 > 0.0; ++it) {
        const Eigen::VectorXd ap = project_y(apply_s(pk));
        const double pap = pk.dot(ap);
        if (pap <= 0.0) break;
        const double alpha = rr / pap;
        y += alpha * pk;
        r -= alpha * ap;
        const double rr_new = r.squaredNorm();
        if (std::sqrt(rr_new) < opt.cg_tol * nb0) break;
        pk = r + (rr_new / rr) * pk;
        rr = rr_new;
      }
    }
    const ScalarField h = project_y(y).cwiseQuotient(sq);
    const ScalarField f1 = mv.cwiseProduct(h);

    // full (unconstrained) equation residual: the solvability detector
    const ScalarField resid = op.apply(f1) - b;
    const double nb = std::sqrt(grid.integrate(b.cwiseQuotient(mv).cwiseAbs2().cwiseProduct(mv)));
    const double nr =
        std::sqrt(grid.integrate(resid.cwiseQuotient(mv).cwiseAbs2().cwiseProduct(mv)));
    lin_res[cell] = (nb > 0.0) ? nr / nb : nr;
    const Mat3 tang = so3::tangent_projection(m.lambda[cell], vmf::flux_lambda(grid, f1));
    con_res[cell] = tang.cwiseAbs().maxCoeff();
    mass_res[cell] = std::abs(grid.integrate(f1));
    terms.f1.row(cell) = f1;
  });

  for (int cell = 0; cell < ncells; ++cell) {
    terms.max_linear_residual = std::max(terms.max_linear_residual, lin_res[cell]);
    terms.max_constraint_residual = std::max(terms.max_constraint_residual, con_res[cell]);
    terms.max_mass_residual = std::max(terms.max_mass_residual, mass_res[cell]);
  }
  if (terms.max_linear_residual > opt.inconsistency_tol) {
    throw InconsistentRHS(
        "solve_f1: right side has a non-removable component (relative residual " +
        std::to_string(terms.max_linear_residual) +
        "); the macroscopic fields do not satisfy the hydrodynamic system");
  }
  return terms;
}

KineticState well_prepared_data(const MacroState& m, const ExpansionTerms& terms,
                                const EulerGrid& grid, double eps, const RemainderPreset& r,
                                double* min_value) {
  KineticState s(m.space, grid, eps);
  s.f = terms.f0 + eps * terms.f1;
  if (r.amplitude != 0.0) {
    // bounded micro remainder with zero mass: amp cos(k x) (g(A) - <g M>) M
    const Mat3 j = so3::cross_matrix({0.3, -0.2, 0.5});
    ScalarField gv(grid.size());
    for (int q = 0; q < grid.size(); ++q) gv(q) = so3::dot_half(j, grid.node(q));
    for (int cell = 0; cell < m.space.total(); ++cell) {
      int i, jj, kk;
      m.space.coords(cell, i, jj, kk);
      const double x = m.space.x(i);
      const double envelope =
          r.amplitude * std::cos(2.0 * M_PI * r.wavenumber * x / m.space.length);
      const ScalarField mv = terms.f0.row(cell) / m.rho(cell);  // f0 = rho M
      const double mean = grid.integrate(gv.cwiseProduct(mv));
      s.f.row(cell) +=
          (eps * envelope) *
          mv.cwiseProduct(gv - mean * ScalarField::Ones(grid.size())).transpose();
    }
  }
  if (min_value) *min_value = s.f.minCoeff();
  return s;
}

EnergyReport remainder_energy(const Eigen::MatrixXd& f_eps, const ExpansionTerms& terms,
                              const MacroState& m, const vmf::VmfParams& p, const EulerGrid& grid,
                              double eps, int s, double lambda0) {
  EnergyReport rep;
  const int ncells = m.space.total();
  const int nq = grid.size();
  const double vol = std::pow(m.space.dx(), m.space.dim);
  const Eigen::MatrixXd f_r = (f_eps - terms.f0 - eps * terms.f1) / eps;

  Eigen::MatrixXd dev(ncells, nq);  // f_R/M - rho_R per cell
  Eigen::MatrixXd hr(ncells, nq);   // f_R/M
  rep.rho_r.resize(ncells);
  std::vector<field::FokkerPlanck> ops;
  ops.reserve(ncells);
  for (int cell = 0; cell < ncells; ++cell) {
    const ScalarField mv = terms.f0.row(cell) / m.rho(cell);
    ops.emplace_back(grid, mv, p.d);
    const ScalarField h = f_r.row(cell).transpose().cwiseQuotient(mv);
    rep.rho_r(cell) = grid.integrate(f_r.row(cell));
    hr.row(cell) = h;
    dev.row(cell) = h - rep.rho_r(cell) * ScalarField::Ones(nq);
  }

  auto ddx = [&](const Eigen::MatrixXd& a) {
    Eigen::MatrixXd out(a.rows(), a.cols());
    const double h2 = 2.0 * m.space.dx();
    for (int cell = 0; cell < ncells; ++cell) {
      const int cm = m.space.neighbor(cell, 0, -1), cp = m.space.neighbor(cell, 0, +1);
      out.row(cell) = (a.row(cp) - a.row(cm)) / h2;
    }
    return out;
  };
  auto ddx_vec = [&](const Eigen::VectorXd& a) {
    Eigen::VectorXd out(a.size());
    const double h2 = 2.0 * m.space.dx();
    for (int cell = 0; cell < ncells; ++cell) {
      const int cm = m.space.neighbor(cell, 0, -1), cp = m.space.neighbor(cell, 0, +1);
      out(cell) = (a(cp) - a(cm)) / h2;
    }
    return out;
  };

  Eigen::MatrixXd dev_k = dev, hr_k = hr;
  Eigen::VectorXd rho_k = rep.rho_r;
  for (int k = 0; k <= s; ++k) {
    if (k > 0) {
      dev_k = ddx(dev_k);
      hr_k = ddx(hr_k);
      rho_k = ddx_vec(rho_k);
    }
    double ek = 0.0, dk = 0.0;
    for (int cell = 0; cell < ncells; ++cell) {
      const ScalarField& mv = ops[cell].density();
      ek += vol * grid.integrate(dev_k.row(cell).transpose().cwiseAbs2().cwiseProduct(mv));
      ek += vol * rho_k(cell) * rho_k(cell);
      dk += vol / eps * ops[cell].dirichlet(hr_k.row(cell), hr_k.row(cell));
    }
    rep.e.push_back(ek);
    rep.d.push_back(dk);
  }

  for (int cell = 0; cell < ncells; ++cell) {
    const ScalarField& mv = ops[cell].density();
    const double dev2 = grid.integrate(dev.row(cell).transpose().cwiseAbs2().cwiseProduct(mv));
    const double dir = ops[cell].dirichlet(hr.row(cell), hr.row(cell));
    rep.poincare_violation = std::max(rep.poincare_violation, lambda0 * dev2 - dir);
  }
  return rep;
}

double weighted_distance(const Eigen::MatrixXd& f, const Eigen::MatrixXd& f0,
                         const MacroState& m, const vmf::VmfParams& p, const EulerGrid& grid) {
  const double vol = std::pow(m.space.dx(), m.space.dim);
  double acc = 0.0;
  for (int cell = 0; cell < m.space.total(); ++cell) {
    const ScalarField mv = vmf::vmf_density(p, m.lambda[cell], grid);
    const ScalarField diff = (f.row(cell) - f0.row(cell)).transpose().cwiseQuotient(mv);
    acc += vol * grid.integrate(diff.cwiseAbs2().cwiseProduct(mv));
  }
  return std::sqrt(acc);
}

ConvergenceStudy convergence_study(const StudyConfig& cfg) {
  ConvergenceStudy out;
  out.min_datum_value = std::numeric_limits<double>::infinity();
  const EulerGrid grid(cfg.so3_na, cfg.so3_nb, cfg.so3_ng);
  const vmf::VmfParams params(cfg.nu0, cfg.d, grid);
  const gci::GciSolution psi = gci::solve_psi0(params, cfg.theta_n);

  // lambda0 on a dedicated eigen resolution (dense solve), agreement-checked
  const field::EulerGrid eig_coarse(12, 6, 12), eig_fine(16, 8, 16);
  const vmf::VmfParams params_eig(cfg.nu0, cfg.d, eig_fine);
  const double lam0_c = field::poincare_constant(eig_coarse, Rotation(), params_eig);
  const double lam0_f = field::poincare_constant(eig_fine, Rotation(), params_eig);
  CoefficientSet coeffs = gci::compute_coefficients(params, psi, lam0_f);
  out.coeffs = coeffs;
  (void)lam0_c;

  if (coeffs.d_star <= 0.0 && !cfg.allow_nonpositive_margin) {
    throw Error("convergence_study: stability margin d* = " + std::to_string(coeffs.d_star) +
                " <= 0; set allow_nonpositive_margin to proceed");
  }

  // hydrodynamic reference (stereo form), shared across the eps sweep
  sohb::SohbRunConfig scfg;
  scfg.grid = cfg.space;
  scfg.initial = cfg.initial;
  scfg.t_end = cfg.t_end;
  scfg.cfl = cfg.cfl_hydro;
  scfg.outputs = cfg.outputs;
  scfg.formulation = "stereo";
  const sohb::SohbTrajectory hydro = sohb::run_sohb(scfg, coeffs);

  // macro states + correctors at every output frame (eps-independent)
  std::vector<MacroState> macros;
  std::vector<ExpansionTerms> correctors;
  SolveF1Options f1opt;
  f1opt.threads = cfg.threads;
  for (std::size_t fr = 0; fr < hydro.times.size(); ++fr) {
    macros.push_back(
        MacroState::from_fields(cfg.space, hydro.rho[fr], hydro.lambda[fr], coeffs));
    correctors.push_back(solve_f1(macros.back(), coeffs, params, grid, f1opt));
  }

  for (double eps : cfg.eps_list) {
    try {
      double min_val = 0.0;
      KineticState init =
          well_prepared_data(macros[0], correctors[0], grid, eps, cfg.remainder, &min_val);
      out.min_datum_value = std::min(out.min_datum_value, min_val);
      sokb::SokbRunConfig kcfg;
      kcfg.t_end = cfg.t_end;
      kcfg.cfl = cfg.cfl_kinetic;
      kcfg.outputs = cfg.outputs;
      kcfg.options = cfg.sokb_options;
      kcfg.options.threads = cfg.threads;
      const sokb::SokbTrajectory kin = sokb::run_sokb(std::move(init), params, kcfg);

      double err = 0.0, sup_e0 = 0.0;
      std::vector<double> e0_series, d0_series, times;
      for (std::size_t fr = 0; fr < kin.times.size(); ++fr) {
        const MacroState& mac = macros[fr];
        const ExpansionTerms& terms = correctors[fr];
        err = std::max(err, weighted_distance(kin.snapshots[fr], terms.f0, mac, params, grid));
        const EnergyReport er = remainder_energy(kin.snapshots[fr], terms, mac, params, grid, eps,
                                                 cfg.energy_order, coeffs.lambda0);
        sup_e0 = std::max(sup_e0, er.e[0]);
        e0_series.push_back(er.e[0]);
        d0_series.push_back(er.d[0]);
        times.push_back(kin.times[fr]);
      }
      double int_d0 = 0.0;
      for (std::size_t i = 1; i < d0_series.size(); ++i) {
        int_d0 += 0.5 * (d0_series[i] + d0_series[i - 1]) * (times[i] - times[i - 1]);
      }
      out.eps.push_back(eps);
      out.err.push_back(err);
      out.sup_e0.push_back(sup_e0);
      out.int_d0.push_back(int_d0);

      if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        std::ofstream csv(cfg.out_dir + "/study_eps_" + std::to_string(eps) + ".csv");
        csv << "t,E0,D0\n";
        csv.precision(17);
        for (std::size_t i = 0; i < times.size(); ++i) {
          csv << times[i] << "," << e0_series[i] << "," << d0_series[i] << "\n";
        }
      }
    } catch (const Error& e) {
      out.failures.push_back("eps " + std::to_string(eps) + ": " + e.what());
    }
  }

  if (out.eps.size() >= 2) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < out.eps.size(); ++i) {
      lx.push_back(std::log(out.eps[i]));
      ly.push_back(std::log(std::max(out.err[i], 1e-300)));
    }
    out.slope = num::ls_slope(lx, ly);
  }
  return out;
}

void write_study_outputs(const ConvergenceStudy& s, const StudyConfig& cfg) {
  if (cfg.out_dir.empty()) return;
  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ofstream csv(cfg.out_dir + "/study.csv");
    csv << "eps,err,supE0,intD0\n";
    csv.precision(17);
    for (std::size_t i = 0; i < s.eps.size(); ++i) {
      csv << s.eps[i] << "," << s.err[i] << "," << s.sup_e0[i] << "," << s.int_d0[i] << "\n";
    }
  }
  nlohmann::json j;
  j["slope"] = s.slope;
  j["eps"] = s.eps;
  j["err"] = s.err;
  j["supE0"] = s.sup_e0;
  j["intD0"] = s.int_d0;
  j["coefficients"] = {{"c1", s.coeffs.c1}, {"c2", s.coeffs.c2}, {"c3", s.coeffs.c3},
                       {"c4", s.coeffs.c4}, {"lambda0", s.coeffs.lambda0},
                       {"d_star", s.coeffs.d_star}};
  j["min_datum_value"] = s.min_datum_value;
  j["failures"] = s.failures;
  std::ofstream os(cfg.out_dir + "/study.json");
  os << j.dump(2) << "\n";
}

}  // namespace attitude::limit
