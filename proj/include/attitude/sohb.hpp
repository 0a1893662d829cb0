#pragma once

// Solvers for the macroscopic system in two equivalent formulations:
//   - stereographic symmetric-hyperbolic form in U = (rho, phi_i, theta_i)
//   - orthonormal-frame form in (rho, Lambda), used for cross-validation and
//     constraint-drift measurement (no reorthonormalization is applied).
//
// Space is a periodic box, 1 or 3 active axes, cell-centered finite volumes.
// Scheme: conservative flux form for rho, quasilinear central differences for
// the other components, local Lax-Friedrichs dissipation on MUSCL-reconstructed
// interface jumps (keeps smooth-data order 2), two-stage SSP Runge-Kutta.

#include <array>
#include <string>
#include <vector>

#include "attitude/so3_core.hpp"
#include "attitude/theta_line.hpp"

namespace attitude::sohb {

using gci::CoefficientSet;
using so3::Mat3;
using so3::Rotation;
using so3::Vec3;

struct SpatialGrid {
  int dim = 1;        // 1 or 3
  int cells = 16;     // per active axis
  double length = 2.0 * M_PI;

  SpatialGrid() = default;
  SpatialGrid(int dim_, int cells_, double length_);

  int total() const;
  double dx() const { return length / cells; }
  int index(int i, int j, int k) const;
  void coords(int c, int& i, int& j, int& k) const;
  int neighbor(int c, int axis, int shift) const;  // periodic
  /// Cell-center coordinate along an axis.
  double x(int idx1d) const { return (idx1d + 0.5) * dx(); }
};

/// Hydrodynamic unknowns per cell in stereographic coordinates.
struct StereoState {
  SpatialGrid grid;
  Eigen::MatrixXd u;  // total() x 7: (rho, phi1, theta1, phi2, theta2, phi3, theta3)
  double t = 0.0;
};

/// Hydrodynamic unknowns per cell as (rho, Lambda-candidate).
struct FrameState {
  SpatialGrid grid;
  Eigen::VectorXd rho;
  std::vector<Mat3> lambda;
  double t = 0.0;
};

/// Symmetric-hyperbolic matrices at one state: A0~ (diagonal, SPD) and the
/// three A^i~ (symmetric). Throws NonPositiveDensity.
void assemble_matrices(const Eigen::Matrix<double, 7, 1>& u_cell, const CoefficientSet& c,
                       Eigen::Matrix<double, 7, 7>& a0, std::array<Eigen::Matrix<double, 7, 7>, 3>& ai);

/// Gershgorin bound on max |eigenvalue| of the pencil (A0~, A^i~) over all
/// cells and active axes; guaranteed >= the true spectral radius.
double cfl_speed(const StereoState& s, const CoefficientSet& c);

/// Characteristic-speed bound at one frame-form cell (chart-free closed form).
double frame_speed_bound(double omega_axis, const CoefficientSet& c);
double cfl_speed(const FrameState& s, const CoefficientSet& c);

/// One SSP-RK2 step. Throws CflViolation if dt exceeds cfl * dx / v_max and
/// NonPositiveDensity if a density goes nonpositive.
void step_stereo(StereoState& s, const CoefficientSet& c, double dt, double cfl = 0.4);
void step_frame(FrameState& s, const CoefficientSet& c, double dt, double cfl = 0.4);

/// Max over cells and pairs of |Lambda e_i . Lambda e_j - delta_ij|.
double constraint_drift(const FrameState& s);
/// Orthogonality drift of the frame reconstructed from stereo coordinates.
double constraint_drift(const StereoState& s);

double mass(const StereoState& s);
double mass(const FrameState& s);
double min_rho(const StereoState& s);

/// Reconstruct (rho, Lambda) per cell from stereo coordinates.
void reconstruct(const StereoState& s, Eigen::VectorXd& rho, std::vector<Mat3>& lambda);

// ---- initial data ----

struct InitialPreset {
  std::string name = "constant";  // constant | gaussian-bump-rho | twist-lambda
  double rho0 = 1.0;
  double amp_rho = 0.0;
  int k_rho = 1;
  double sigma = 0.7;       // gaussian bump width (absolute units)
  double amp_twist = 0.0;
  int k_twist = 1;
  Vec3 axis = Vec3(1, 1, 1).normalized();
  Vec3 base_angles = Vec3(0.3, -0.4, 0.2);  // axis-angle vector of the base frame
};

struct InitialData {
  Eigen::VectorXd rho;
  std::vector<Rotation> lambda;
};

InitialData make_initial_data(const InitialPreset& p, const SpatialGrid& g);

/// Global rotation R such that all columns of R*Lambda stay away from the
/// chart pole (0,0,1); identity when the data is already safe. Deterministic.
Rotation pole_avoiding_rotation(const InitialData& data);

StereoState to_stereo(const InitialData& data, const SpatialGrid& g, const Rotation& pre_rotation);
FrameState to_frame(const InitialData& data, const SpatialGrid& g);

// ---- orchestrated run ----

struct SohbRunConfig {
  SpatialGrid grid;
  InitialPreset initial;
  double t_end = 0.5;
  double cfl = 0.4;
  int outputs = 10;              // number of output frames after t=0
  std::string formulation = "stereo";  // stereo | frame
  std::string out_dir;           // empty: no files written
};

struct SohbDiagnosticsRow {
  double t, mass, min_rho, max_constraint_drift;
};

struct SohbTrajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> rho;            // per output frame
  std::vector<std::vector<Mat3>> lambda;       // per output frame (pre-rotation removed)
  std::vector<SohbDiagnosticsRow> diagnostics;
  Rotation pre_rotation;                        // applied internally (stereo runs)
  int steps_taken = 0;
};

/// Runs the configured solver, recording output frames at uniform cadence.
/// Any step error aborts the run with the failing time recorded in the error.
SohbTrajectory run_sohb(const SohbRunConfig& cfg, const CoefficientSet& c);

/// Writes diagnostics CSV (t, mass, min_rho, max_constraint_drift) and, per
/// output frame, a row-major binary snapshot with a JSON sidecar.
void write_sohb_outputs(const SohbTrajectory& traj, const SohbRunConfig& cfg);

}  // namespace attitude::sohb
