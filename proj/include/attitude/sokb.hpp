#pragma once

// Discrete-velocity solver for the eps-scaled kinetic equation: first-order
// upwind transport in space with node-wise velocities (A e1), stiff implicit
// Fokker-Planck relaxation in attitude space (backward Euler substeps with a
// per-cell frozen mean attitude), composed by Strang splitting.

#include <cstdint>

#include "attitude/so3_calculus.hpp"
#include "attitude/sohb.hpp"

namespace attitude::sokb {

using field::EulerGrid;
using field::ScalarField;
using sohb::SpatialGrid;
using so3::Mat3;
using so3::Rotation;

struct KineticState {
  SpatialGrid space;
  const EulerGrid* grid = nullptr;  // SO(3) grid, not owned
  double eps = 1.0;
  double t = 0.0;
  Eigen::MatrixXd f;  // space.total() x grid->size(), nonnegative

  KineticState() = default;
  KineticState(const SpatialGrid& s, const EulerGrid& g, double eps_);
};

struct MomentField {
  Eigen::VectorXd rho;
  std::vector<Mat3> lam;       // flux moment lambda[f] per cell
  std::vector<Mat3> attitude;  // PD(lambda[f]) where defined
  std::vector<bool> attitude_ok;
};

MomentField moments(const KineticState& s);

struct SokbOptions {
  double rho_floor_rel = 1e-8;   // relative to the initial mean density
  int substeps = 0;              // 0 = automatic from dt/eps
  bool picard_refresh = false;   // one refresh of the frozen attitude
  double cg_tol = 1e-13;
  int cg_maxit = 5000;
  int threads = 0;               // 0 = env/hardware
};

struct CollisionStats {
  int vacuum_skipped = 0;
  int singular_skipped = 0;
  int substeps = 0;
  int max_cg_iterations = 0;
  double clipped_mass = 0.0;  // cumulative clipped negative mass
};

/// Upwind transport over dt; exactly conservative. Throws CflViolation.
void transport_step(KineticState& s, double dt);

/// Implicit collision relaxation over dt at stiffness 1/eps; per-cell mass
/// conserved to solver tolerance. Cells below the vacuum floor or with a
/// singular flux are skipped and counted.
CollisionStats collision_step(KineticState& s, const vmf::VmfParams& p, double dt,
                              const SokbOptions& opt, double rho_floor_abs);

/// H(f) = int L_{M_Lambda} f (f/M) dA = -d ||grad(f/M)||^2_{L2(M)} (<= 0).
double dissipation_functional(const EulerGrid& grid, const ScalarField& f_cell,
                              const Rotation& lambda, const vmf::VmfParams& p);

struct SokbRunConfig {
  double t_end = 0.5;
  double cfl = 0.8;    // fraction of the unit-speed transport limit
  int outputs = 10;
  SokbOptions options;
  std::string out_dir;  // empty: no files
};

struct SokbDiagnosticsRow {
  double t, mass, total_h, max_equilibrium_distance, min_rho, clipped_mass;
};

struct SokbTrajectory {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> snapshots;  // f at output times
  std::vector<SokbDiagnosticsRow> diagnostics;
  CollisionStats stats;
  int steps_taken = 0;
};

/// Strang-split run from the given initial state.
SokbTrajectory run_sokb(KineticState state, const vmf::VmfParams& p, const SokbRunConfig& cfg);

/// Snapshot: binary f array (cells x nodes row-major) + JSON sidecar; moment
/// time series CSV (t, cell-averaged rho, entries of cell-averaged lambda,
/// Frobenius distance of the mean attitude to a reference rotation).
void write_sokb_outputs(const SokbTrajectory& traj, const KineticState& last,
                        const vmf::VmfParams& p, const SokbRunConfig& cfg,
                        const Rotation& reference);

}  // namespace attitude::sokb
