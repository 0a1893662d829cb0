#pragma once

// The weighted Fokker-Planck operator on the SO(3) grid and its spectral
// machinery: Dirichlet form, dissipation functional, Poincare constant,
// dense export for offline inspection.

#include <string>

#include "attitude/euler_grid.hpp"
#include "attitude/vmf.hpp"

namespace attitude::field {

/// L_M f = d div(M grad(f/M)), with the checkerboard-penalized Dirichlet
/// form so the discrete kernel is exactly span{M}. Conservative
/// (integrate(L f) = 0 to rounding) and symmetric in the M-weighted metric.
class FokkerPlanck {
 public:
  FokkerPlanck(const EulerGrid& grid, ScalarField m, double d);

  const EulerGrid& grid() const { return *grid_; }
  const ScalarField& density() const { return m_; }
  double diffusion() const { return d_; }

  /// L f.
  ScalarField apply(const ScalarField& f) const;

  /// K h with K = G^T diag(w M) G + sum_i pen_i (w chi_i)(w chi_i)^T,
  /// the unweighted matrix of the Dirichlet form; L f = -d (K (f/M)) / w.
  ScalarField stiffness_apply(const ScalarField& h) const;

  /// a(h1, h2) = sum_q w_q M_q grad h1 . grad h2 + penalty terms. Symmetric PSD.
  double dirichlet(const ScalarField& h1, const ScalarField& h2) const;

  /// H(f) = int L f (f/M) dA = -d a(f/M, f/M) <= 0, equality iff f/M constant.
  double dissipation(const ScalarField& f) const;

  /// Dense matrix of apply() (column-by-column); capped at 4200 nodes.
  Eigen::MatrixXd dense_operator() const;

  /// Dense stiffness K; capped at 4200 nodes.
  Eigen::MatrixXd dense_stiffness() const;

 private:
  const EulerGrid* grid_;
  ScalarField m_;
  double d_;
  ScalarField wm_;  // w .* M
};

/// Smallest nonzero eigenvalue of the form a(h,h)/||h - mean||^2_{L2(M)}: the
/// spectral gap of -(1/d) L_M. Dense eigen-solve; requires grid.size() <= 4200.
/// Throws DegenerateKernel if the second-smallest eigenvalue is < 1e-10.
double poincare_constant(const EulerGrid& grid, const so3::Rotation& lambda,
                         const vmf::VmfParams& params);

/// Dense row-major binary blob with a 16-byte header (8-byte magic + u64 N).
void export_dense_operator(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd import_dense_operator(const std::string& path);

}  // namespace attitude::field
