#pragma once

// Von Mises-Fisher equilibria on SO(3), their normalizer, flux moments
// lambda[f], mean attitude Lambda[f] = PD(lambda[f]), and the closed-form
// first/second eps-derivatives of Lambda[f0 + eps f1].
//
// Constant intensity of coordination throughout: sigma(mu) = nu0 * mu, so the
// exponent is kappa * dot_half(A, Lambda) with kappa = nu0 / d.

#include <Eigen/Dense>

#include "attitude/euler_grid.hpp"
#include "attitude/so3_core.hpp"

namespace attitude::vmf {

using field::EulerGrid;
using field::ScalarField;
using so3::Mat3;
using so3::Rotation;

struct VmfParams {
  double nu0;    // intensity > 0
  double d;      // diffusion > 0
  double kappa;  // nu0 / d
  double z;      // normalizer, cached at construction

  /// Computes and cross-checks the normalizer (1D Weyl vs 3D grid quadrature).
  VmfParams(double nu0_, double d_, const EulerGrid& grid);
};

/// Z(kappa) by 1D Weyl quadrature: (2/pi) int_0^pi e^{kappa(1/2+cos t)} sin^2(t/2) dt.
double vmf_normalizer_1d(double kappa);

/// Z(kappa) by 3D grid quadrature of exp(kappa dot_half(A, Id)).
double vmf_normalizer_3d(double kappa, const EulerGrid& grid);

/// Pointwise density value M_Lambda(A) = exp(kappa dot_half(A, Lambda)) / Z.
double vmf_value(const VmfParams& p, const Rotation& lambda, const Mat3& a);

/// Density field on the grid; strictly positive, integrates to 1 (quadrature).
ScalarField vmf_density(const VmfParams& p, const Rotation& lambda, const EulerGrid& grid);

/// lambda[f] = int f(A) A dA, entrywise quadrature.
Mat3 flux_lambda(const EulerGrid& grid, const ScalarField& f);

/// Lambda[f] = PD(lambda[f]); propagates SingularFlux.
Rotation mean_attitude(const EulerGrid& grid, const ScalarField& f);

/// Closed forms of the first and second eps-derivatives of
/// Lambda[rho0 M_{Lambda0} + eps f1] at eps = 0, in terms of lam1 = lambda[f1]:
///   first  = (c1 rho0)^{-1} P_{T_{Lambda0}}(lam1)
///   second = (c1 rho0)^{-2} Lambda0 (3 S^2 - B^T B - 2 B S),
/// B = Lambda0^T lam1, S = (B + B^T)/2.
void attitude_derivatives(const EulerGrid& grid, double rho0, const Rotation& lambda0,
                          const ScalarField& f1, double c1, Mat3& first, Mat3& second);

}  // namespace attitude::vmf
