#pragma once

// The 1D theta-line machinery: weights m(theta), m~(theta), the boundary-value
// ODE for psi0~, the coefficients c1..c4, and the stability margin d*.
//
// The weighted average <g>_{m sin^2(theta/2)} uses the Weyl density
// sin^2(theta/2) on [0, pi] (the paper's "sin^2(sin theta/2)" is read as a
// typo for sin^2(theta/2); the 3D cross-check lambda[M_Id] = c1 Id pins this).

#include <Eigen/Dense>

#include "attitude/numerics.hpp"
#include "attitude/vmf.hpp"

namespace attitude::gci {

using vmf::VmfParams;

/// Gauss-Legendre nodes/weights on (0, pi) for int_0^pi . d(theta).
struct ThetaGrid {
  Eigen::VectorXd theta;
  Eigen::VectorXd w;
  explicit ThetaGrid(int n);
};

/// m(theta) = Z^{-1} exp(kappa (1/2 + cos theta)).
double weight_m(double theta, const VmfParams& p);

/// Solution of the boundary-value ODE
///   sin^{-2}(th/2) d/dth( sin^2(th/2) m d/dth( sin th psi~ ) )
///     - m sin th / (2 sin^2(th/2)) psi~ = sin th m
/// solved for u = sin(th) psi~ with u(0) = u(pi) = 0 in self-adjoint flux form,
/// at resolutions n and 2n with Richardson extrapolation of the nodal values.
class GciSolution {
 public:
  /// psi~(theta), clamped natural-spline interpolation of the extrapolated values.
  double psi_tilde(double theta) const { return spline_(theta); }

  /// psi_bar(mu) with psi~(theta) = psi_bar(1/2 + cos theta).
  double psi_bar(double mu) const;

  /// Flux-form stencil residual of the recovered solution at resolution n,
  /// relative to the right-hand-side norm (validates the recovery algebra).
  double residual_norm() const { return residual_; }

  /// sup |psi_n - psi_2n| on shared nodes (order-2 self-convergence estimate).
  double convergence_sup() const { return convergence_; }

  bool sign_definite() const { return sign_definite_; }

  /// Uniform interior nodes theta_j = j pi / n (j = 1..n-1) and psi values there.
  const Eigen::VectorXd& nodes() const { return nodes_; }
  const Eigen::VectorXd& values() const { return values_; }

 private:
  friend GciSolution solve_psi0(const VmfParams&, int);
  Eigen::VectorXd nodes_, values_;
  num::CubicSpline spline_;
  double residual_ = 0.0;
  double convergence_ = 0.0;
  bool sign_definite_ = false;
};

/// m~(theta) = nu0 sin^2(theta) m(theta) psi~(theta) (constant intensity).
double weight_mtilde(double theta, const VmfParams& p, const GciSolution& g);

/// Requires n >= 64 (even); throws SolverSingular on a singular discrete system.
GciSolution solve_psi0(const VmfParams& p, int n);

/// c1 = (2/3) <1/2 + cos theta>_{m(theta) sin^2(theta/2)}, in (0,1) for kappa > 0.
double compute_c1(const VmfParams& p);

/// c2 = (1/5)<2+3cos>, c3 = d <1/nu0>, c4 = (1/5)<1-cos>, all weighted by
/// m~(theta) sin^2(theta/2) (signed; normalization cancels the psi~ sign).
/// Throws DegenerateWeight if the normalization integral is ~ 0.
void compute_c2_c3_c4(const VmfParams& p, const GciSolution& g, double& c2, double& c3,
                      double& c4);

/// d* = d - 25 * 3^{1/4} * nu0 / (c1 * lambda0).
double stability_margin(double d, const VmfParams& p, double c1, double lambda0);

struct CoefficientSet {
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0;
  double lambda0 = 0;
  double d_star = 0;
};

/// Bundles the full set (lambda0 supplied by the caller's eigen-solve).
CoefficientSet compute_coefficients(const VmfParams& p, const GciSolution& g, double lambda0);

}  // namespace attitude::gci
