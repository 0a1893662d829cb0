#include "attitude/sokb.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>

#include "attitude/numerics.hpp"

namespace attitude::sokb {

KineticState::KineticState(const SpatialGrid& s, const EulerGrid& g, double eps_)
    : space(s), grid(&g), eps(eps_) {
  if (eps <= 0.0) throw Error("KineticState: eps must be positive");
  f = Eigen::MatrixXd::Zero(s.total(), g.size());
}

MomentField moments(const KineticState& s) {
  MomentField m;
  const int n = s.space.total();
  m.rho.resize(n);
  m.lam.resize(n);
  m.attitude.resize(n);
  m.attitude_ok.assign(n, false);
  for (int c = 0; c < n; ++c) {
    const ScalarField fc = s.f.row(c);
    m.rho(c) = s.grid->integrate(fc);
    m.lam[c] = vmf::flux_lambda(*s.grid, fc);
    try {
      m.attitude[c] = so3::polar_decompose(m.lam[c]).matrix();
      m.attitude_ok[c] = true;
    } catch (const SingularFlux&) {
      m.attitude[c] = Mat3::Identity();
    }
  }
  return m;
}

void transport_step(KineticState& s, double dt) {
  const int ncells = s.space.total();
  const int nq = s.grid->size();
  const double h = s.space.dx();
  // per-axis node speeds (A e1)_i = A(i,0)
  double vmax_sum = 0.0;
  Eigen::MatrixXd v(s.space.dim, nq);
  for (int q = 0; q < nq; ++q) {
    double sum = 0.0;
    for (int axis = 0; axis < s.space.dim; ++axis) {
      v(axis, q) = s.grid->node(q)(axis, 0);
      sum += std::abs(v(axis, q));
    }
    vmax_sum = std::max(vmax_sum, sum);
  }
  if (dt * vmax_sum > h * (1.0 + 1e-12)) {
    throw CflViolation("transport_step: dt exceeds upwind CFL limit");
  }
  Eigen::MatrixXd fnew = s.f;
  for (int c = 0; c < ncells; ++c) {
    for (int axis = 0; axis < s.space.dim; ++axis) {
      const int cm = s.space.neighbor(c, axis, -1);
      const int cp = s.space.neighbor(c, axis, +1);
      for (int q = 0; q < nq; ++q) {
        const double vq = v(axis, q);
        const double up = std::max(vq, 0.0) * (s.f(c, q) - s.f(cm, q));
        const double dn = std::min(vq, 0.0) * (s.f(cp, q) - s.f(c, q));
        fnew(c, q) -= dt / h * (up + dn);
      }
    }
  }
  s.f.swap(fnew);
  s.t += dt;
}

namespace {

/// Grid-dependent Jacobi estimate of diag(stiffness): computed once per grid
/// shape (the node set and weights are determined by the three sizes).
const Eigen::VectorXd& stiffness_diag_estimate(const EulerGrid& g) {
  static std::mutex mtx;
  static std::vector<std::pair<std::array<int, 3>, Eigen::VectorXd>> cache;
  const std::array<int, 3> key{g.na(), g.nb(), g.ng()};
  std::lock_guard<std::mutex> lock(mtx);
  for (auto& e : cache) {
    if (e.first == key) return e.second;
  }
  Eigen::VectorXd d(g.size());
  ScalarField e = ScalarField::Zero(g.size());
  const Eigen::VectorXd& w = g.weights();
  for (int j = 0; j < g.size(); ++j) {
    e(j) = 1.0;
    const field::TangentField col = g.grad(e);
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += col.col(c).cwiseAbs2().dot(w);
    d(j) = s;
    e(j) = 0.0;
  }
  cache.emplace_back(key, std::move(d));
  return cache.back().second;
}

}  // namespace

CollisionStats collision_step(KineticState& s, const vmf::VmfParams& p, double dt,
                              const SokbOptions& opt, double rho_floor_abs) {
  CollisionStats stats;
  const int ncells = s.space.total();
  const EulerGrid& g = *s.grid;
  int substeps = opt.substeps;
  if (substeps <= 0) {
    substeps = std::min(32, std::max(1, static_cast<int>(std::ceil(dt * p.d / s.eps))));
  }
  stats.substeps = substeps;
  const double tau = dt / substeps * p.d / s.eps;
  const Eigen::VectorXd& d0 = stiffness_diag_estimate(g);

  std::atomic<int> vacuum{0}, singular{0}, maxit{0};
  std::mutex clip_mutex;
  double clipped = 0.0;

  const int nthreads = num::resolve_threads(opt.threads);
  num::parallel_for(ncells, nthreads, [&](int c) {
    ScalarField f = s.f.row(c);
    const double rho = g.integrate(f);
    if (rho < rho_floor_abs) {
      vacuum.fetch_add(1);
      return;
    }
    int local_picard = opt.picard_refresh ? 1 : 0;
    for (int pass = 0; pass <= local_picard; ++pass) {
      Rotation lam;
      try {
        lam = vmf::mean_attitude(g, f);
      } catch (const SingularFlux&) {
        singular.fetch_add(1);
        return;
      }
      const ScalarField m = vmf::vmf_density(p, lam, g);
      field::FokkerPlanck op(g, m, 1.0);  // diffusion folded into tau
      const Eigen::VectorXd b_diag = g.weights().cwiseProduct(m);
      const Eigen::VectorXd precond = b_diag + tau * m.cwiseProduct(d0);
      ScalarField gval = f.cwiseQuotient(m);
      auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return b_diag.cwiseProduct(x) + tau * op.stiffness_apply(x);
      };
      const int inner = (pass == local_picard) ? substeps : 1;
      for (int k = 0; k < inner; ++k) {
        const Eigen::VectorXd rhs = b_diag.cwiseProduct(gval);
        num::CgResult r = num::conjugate_gradient(apply, rhs, gval, opt.cg_tol, opt.cg_maxit,
                                                  &precond);
        int prev = maxit.load();
        while (r.iterations > prev && !maxit.compare_exchange_weak(prev, r.iterations)) {
        }
      }
      f = m.cwiseProduct(gval);
    }
    // negativity clipping with mass bookkeeping
    double neg = 0.0;
    for (int q = 0; q < g.size(); ++q) {
      if (f(q) < 0.0) {
        neg -= g.weights()(q) * f(q);
        f(q) = 0.0;
      }
    }
    if (neg > 0.0) {
      std::lock_guard<std::mutex> lock(clip_mutex);
      clipped += neg;
    }
    s.f.row(c) = f;
  });

  stats.vacuum_skipped = vacuum.load();
  stats.singular_skipped = singular.load();
  stats.max_cg_iterations = maxit.load();
  stats.clipped_mass = clipped;
  return stats;
}

double dissipation_functional(const EulerGrid& grid, const ScalarField& f_cell,
                              const Rotation& lambda, const vmf::VmfParams& p) {
  field::FokkerPlanck op(grid, vmf::vmf_density(p, lambda, grid), p.d);
  return op.dissipation(f_cell);
}

SokbTrajectory run_sokb(KineticState state, const vmf::VmfParams& p, const SokbRunConfig& cfg) {
  SokbTrajectory traj;
  const EulerGrid& g = *state.grid;
  const int ncells = state.space.total();
  const double vol = std::pow(state.space.dx(), state.space.dim);
  double rho_mean0 = 0.0;
  for (int c = 0; c < ncells; ++c) rho_mean0 += g.integrate(state.f.row(c));
  rho_mean0 /= ncells;
  const double rho_floor = cfg.options.rho_floor_rel * rho_mean0;
  const double total_mass0 = rho_mean0 * ncells * vol;

  auto record = [&](const KineticState& s) {
    SokbDiagnosticsRow row{};
    row.t = s.t;
    double mass = 0.0, total_h = 0.0, max_dist = 0.0, min_rho = 1e300;
    for (int c = 0; c < ncells; ++c) {
      const ScalarField fc = s.f.row(c);
      const double rho = g.integrate(fc);
      mass += rho * vol;
      min_rho = std::min(min_rho, rho);
      if (rho > rho_floor) {
        try {
          const Rotation lam = vmf::mean_attitude(g, fc);
          const ScalarField m = vmf::vmf_density(p, lam, g);
          field::FokkerPlanck op(g, m, p.d);
          total_h += op.dissipation(fc) * vol;
          const ScalarField dev = fc.cwiseQuotient(m) - rho * ScalarField::Ones(g.size());
          max_dist = std::max(max_dist,
                              std::sqrt(g.integrate(dev.cwiseAbs2().cwiseProduct(m))));
        } catch (const SingularFlux&) {
        }
      }
    }
    row.mass = mass;
    row.total_h = total_h;
    row.max_equilibrium_distance = max_dist;
    row.min_rho = min_rho;
    row.clipped_mass = traj.stats.clipped_mass;
    traj.times.push_back(s.t);
    traj.snapshots.push_back(s.f);
    traj.diagnostics.push_back(row);
  };

  record(state);
  const double dt_out = cfg.t_end / cfg.outputs;
  for (int frame = 1; frame <= cfg.outputs; ++frame) {
    const double t_target = frame * dt_out;
    while (state.t < t_target - 1e-12) {
      double dt = cfg.cfl * state.space.dx() / (state.space.dim == 1 ? 1.0 : std::sqrt(3.0));
      dt = std::min(dt, t_target - state.t);
      transport_step(state, 0.5 * dt);
      const CollisionStats st = collision_step(state, p, dt, cfg.options, rho_floor);
      traj.stats.vacuum_skipped += st.vacuum_skipped;
      traj.stats.singular_skipped += st.singular_skipped;
      traj.stats.clipped_mass += st.clipped_mass;
      traj.stats.max_cg_iterations = std::max(traj.stats.max_cg_iterations, st.max_cg_iterations);
      traj.stats.substeps = st.substeps;
      transport_step(state, 0.5 * dt);
      state.t = std::round(state.t / (0.5 * dt)) * (0.5 * dt);  // suppress drift
      ++traj.steps_taken;
      if (traj.stats.clipped_mass > 1e-6 * total_mass0) {
        throw Error("run_sokb: clipped negative mass exceeds 1e-6 of total (t = " +
                    std::to_string(state.t) + ")");
      }
    }
    record(state);
  }
  return traj;
}

void write_sokb_outputs(const SokbTrajectory& traj, const KineticState& last,
                        const vmf::VmfParams& p, const SokbRunConfig& cfg,
                        const Rotation& reference) {
  namespace fs = std::filesystem;
  if (cfg.out_dir.empty()) return;
  fs::create_directories(cfg.out_dir);
  const EulerGrid& g = *last.grid;
  const int ncells = last.space.total();
  {
    std::ofstream csv(cfg.out_dir + "/sokb_moments.csv");
    csv << "t,rho_mean,lam_00,lam_01,lam_02,lam_10,lam_11,lam_12,lam_20,lam_21,lam_22,"
           "attitude_distance\n";
    csv.precision(17);
    for (std::size_t fr = 0; fr < traj.times.size(); ++fr) {
      double rho_mean = 0.0;
      Mat3 lam_mean = Mat3::Zero();
      for (int c = 0; c < ncells; ++c) {
        const ScalarField fc = traj.snapshots[fr].row(c);
        rho_mean += g.integrate(fc) / ncells;
        lam_mean += vmf::flux_lambda(g, fc) / ncells;
      }
      double dist = 0.0;
      try {
        const Mat3 att = so3::polar_decompose(lam_mean).matrix();
        dist = (att - reference.matrix()).norm();
      } catch (const SingularFlux&) {
        dist = -1.0;
      }
      csv << traj.times[fr] << "," << rho_mean;
      for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 3; ++col) csv << "," << lam_mean(r, col);
      csv << "," << dist << "\n";
    }
  }
  {
    std::ofstream csv(cfg.out_dir + "/sokb_diagnostics.csv");
    csv << "t,mass,total_h,max_equilibrium_distance,min_rho,clipped_mass\n";
    csv.precision(17);
    for (const auto& row : traj.diagnostics) {
      csv << row.t << "," << row.mass << "," << row.total_h << ","
          << row.max_equilibrium_distance << "," << row.min_rho << "," << row.clipped_mass
          << "\n";
    }
  }
  for (std::size_t fr = 0; fr < traj.times.size(); ++fr) {
    const std::string base = cfg.out_dir + "/sokb_frame_" + std::to_string(fr);
    std::ofstream bin(base + ".bin", std::ios::binary);
    for (int c = 0; c < ncells; ++c) {
      Eigen::VectorXd row = traj.snapshots[fr].row(c);
      bin.write(reinterpret_cast<const char*>(row.data()), sizeof(double) * row.size());
    }
    nlohmann::json meta;
    meta["t"] = traj.times[fr];
    meta["eps"] = last.eps;
    meta["cells"] = ncells;
    meta["dim"] = last.space.dim;
    meta["length"] = last.space.length;
    meta["so3_nodes"] = g.size();
    meta["so3_grid"] = {g.na(), g.nb(), g.ng()};
    meta["layout"] = "f[cell][node] row-major doubles";
    std::ofstream side(base + ".json");
    side << meta.dump(2) << "\n";
  }
}

}  // namespace attitude::sokb
