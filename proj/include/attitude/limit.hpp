#pragma once

// Hilbert-expansion machinery: the leading term f0 = rho0 M_{Lambda0}, the
// constrained corrector f1, well-prepared initial data, remainder energies,
// and the eps-convergence study against the hydrodynamic solution.

#include "attitude/gci_verify.hpp"
#include "attitude/sokb.hpp"

namespace attitude::limit {

using field::EulerGrid;
using field::ScalarField;
using gci::CoefficientSet;
using sohb::SpatialGrid;
using sokb::KineticState;
using so3::Mat3;
using so3::Rotation;

/// Macroscopic fields with spatial derivatives (central differences) and time
/// derivatives evaluated from the hydrodynamic equations (never by time
/// differencing). Frames are projected to SO(3).
struct MacroState {
  SpatialGrid space;
  Eigen::VectorXd rho;
  std::vector<Rotation> lambda;
  Eigen::MatrixXd grad_rho;                  // cells x dim
  std::vector<std::array<Mat3, 3>> grad_lambda;
  Eigen::VectorXd drho_dt;
  std::vector<Mat3> dlambda_dt;

  static MacroState from_fields(const SpatialGrid& g, const Eigen::VectorXd& rho,
                                const std::vector<Mat3>& lambda, const CoefficientSet& c);
};

/// f0(cell, node) = rho0(cell) * M_{Lambda0(cell)}(node).
Eigen::MatrixXd build_f0(const MacroState& m, const vmf::VmfParams& p, const EulerGrid& grid);

struct ExpansionTerms {
  Eigen::MatrixXd f0, f1;  // cells x nodes
  double max_linear_residual = 0.0;      // relative, worst cell
  double max_constraint_residual = 0.0;  // |P_T lambda[f1]| worst cell
  double max_mass_residual = 0.0;        // |int f1 dA| worst cell
};

struct SolveF1Options {
  double cg_tol = 1e-12;
  int cg_maxit = 20000;
  double inconsistency_tol = 1e-8;  // relative equation residual that raises
  int threads = 0;
};

/// Per cell, solves L_{M_{Lambda0}} f1 = P^perp(dt f0 + A e1 . grad_x f0) with
/// the zero-mass and GCI tangency constraints via projected CG. Throws
/// InconsistentRHS when the right side has a non-removable component (the
/// executable solvability condition).
ExpansionTerms solve_f1(const MacroState& m, const CoefficientSet& c, const vmf::VmfParams& p,
                        const EulerGrid& grid, const SolveF1Options& opt = {});

/// Optional bounded remainder preset for the well-prepared datum.
struct RemainderPreset {
  double amplitude = 0.0;  // 0: f_R^in = 0 (default well-prepared case)
  int wavenumber = 1;
};

/// f^in = f0 + eps f1 + eps f_R^in; also reports the minimum nodal value.
KineticState well_prepared_data(const MacroState& m, const ExpansionTerms& terms,
                                const EulerGrid& grid, double eps, const RemainderPreset& r,
                                double* min_value = nullptr);

struct EnergyReport {
  std::vector<double> e;  // E_k, k = 0..s
  std::vector<double> d;  // D_k
  Eigen::VectorXd rho_r;  // per cell
  double poincare_violation = 0.0;  // max over cells of lam0 ||dev||^2 - ||grad||^2 (<= 0 ok)
};

/// f_R = (f_eps - f0 - eps f1)/eps; E_k and D_k with central spatial
/// derivatives and full quadrature; s = highest derivative order.
EnergyReport remainder_energy(const Eigen::MatrixXd& f_eps, const ExpansionTerms& terms,
                              const MacroState& m, const vmf::VmfParams& p, const EulerGrid& grid,
                              double eps, int s, double lambda0);

/// Micro-macro weighted distance ||(f - f0)/M||_{L2_{x,A}(M)}.
double weighted_distance(const Eigen::MatrixXd& f, const Eigen::MatrixXd& f0,
                         const MacroState& m, const vmf::VmfParams& p, const EulerGrid& grid);

struct StudyConfig {
  SpatialGrid space{1, 64, 2.0 * M_PI};
  int so3_na = 24, so3_nb = 12, so3_ng = 24;
  int theta_n = 4096;
  double d = 1.0, nu0 = 1.0;
  sohb::InitialPreset initial;
  double t_end = 0.4;
  int outputs = 8;
  double cfl_kinetic = 0.8;
  double cfl_hydro = 0.4;
  std::vector<double> eps_list{0.2, 0.1, 0.05, 0.025};
  bool allow_nonpositive_margin = false;
  int energy_order = 0;  // s
  sokb::SokbOptions sokb_options;
  RemainderPreset remainder;
  std::string out_dir;
  int threads = 0;
};

struct ConvergenceStudy {
  std::vector<double> eps, err, sup_e0, int_d0;
  double slope = 0.0;
  CoefficientSet coeffs;
  double min_datum_value = 0.0;
  std::vector<std::string> failures;  // per-eps failure records
};

/// Runs the hydrodynamic reference once, then one kinetic run per eps from
/// well-prepared data; errors are sup over shared output times. Refuses when
/// d* <= 0 unless allow_nonpositive_margin is set.
ConvergenceStudy convergence_study(const StudyConfig& cfg);

/// study.csv, study.json and per-eps diagnostics under cfg.out_dir.
void write_study_outputs(const ConvergenceStudy& s, const StudyConfig& cfg);

}  // namespace attitude::limit
