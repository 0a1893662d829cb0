#pragma once

// Haar-measure quadrature over SO(3) on a ZYZ Euler-angle tensor grid:
// uniform periodic nodes in alpha and gamma, Gauss-Legendre nodes in
// u = cos(beta). Weights implement the probability Haar measure
// dA = (8 pi^2)^{-1} sin(beta) d(alpha) d(beta) d(gamma), total mass 1.
//
// Fields are flat arrays indexed q = (ia*nb + ib)*ng + ig.

#include <Eigen/Dense>
#include <vector>

#include "attitude/errors.hpp"
#include "attitude/so3_core.hpp"

namespace attitude::field {

using ScalarField = Eigen::VectorXd;
/// Coefficients w(A) of the tangent matrix A [w]_x, one column per frame axis.
using TangentField = Eigen::Matrix<double, Eigen::Dynamic, 3>;

class EulerGrid {
 public:
  /// Requires na, ng >= 8 even and nb >= 4; throws GridTooCoarse otherwise.
  EulerGrid(int na, int nb, int ng);

  int na() const { return na_; }
  int nb() const { return nb_; }
  int ng() const { return ng_; }
  int size() const { return n_; }

  int index(int ia, int ib, int ig) const { return (ia * nb_ + ib) * ng_ + ig; }

  const so3::Mat3& node(int q) const { return nodes_[q]; }
  const Eigen::VectorXd& weights() const { return w_; }

  double integrate(const ScalarField& f) const;

  /// Body-frame gradient: per node the three directional derivatives
  /// d/dt|_0 f(A exp(t [e_i]_x)). Exact on band-limited fields.
  TangentField grad(const ScalarField& f) const;

  /// Unweighted transpose of grad as a linear map.
  ScalarField grad_transpose(const TangentField& v) const;

  /// Exact negative weighted adjoint of grad: <div V, g>_w = -<V, grad g>_w.
  ScalarField div(const TangentField& v) const;

  /// Checkerboard null modes of the nodal gradient (alpha/gamma Nyquist
  /// patterns) and their assigned gradient-energy penalties (N/2)^2-scale.
  /// The Fokker-Planck Dirichlet form adds sum_i pen_i <chi_i, h>_w^2 so the
  /// discrete kernel is exactly the constants.
  const std::vector<ScalarField>& checkerboards() const { return chi_; }
  const std::vector<double>& checkerboard_penalties() const { return pen_; }

  /// <chi_i, h>_w for i = 0,1,2.
  Eigen::Vector3d checkerboard_amplitudes(const ScalarField& h) const;

 private:
  int na_, nb_, ng_, n_;
  Eigen::VectorXd alpha_, gamma_;
  Eigen::VectorXd u_, wu_, beta_, sinb_;
  Eigen::VectorXd w_;
  std::vector<so3::Mat3> nodes_;
  Eigen::MatrixXd da_, dg_, du_;   // differentiation matrices
  Eigen::VectorXd cosg_, sing_;
  std::vector<ScalarField> chi_;
  std::vector<double> pen_;

  ScalarField apply_alpha(const Eigen::MatrixXd& m, const ScalarField& f) const;
  ScalarField apply_gamma(const Eigen::MatrixXd& m, const ScalarField& f) const;
  ScalarField apply_beta(const Eigen::MatrixXd& m, const ScalarField& f) const;
  ScalarField shift_half(const ScalarField& f) const;
  ScalarField d_beta(const ScalarField& f) const;
  ScalarField d_beta_transpose(const ScalarField& f) const;
};

/// Gauss-Legendre nodes/weights on (-1,1), ascending nodes.
void gauss_legendre(int n, Eigen::VectorXd& x, Eigen::VectorXd& w);

}  // namespace attitude::field
