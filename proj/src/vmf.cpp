#include "attitude/vmf.hpp"

#include <cmath>

namespace attitude::vmf {

double vmf_normalizer_1d(double kappa) {
  // integrand is entire; 200-point Gauss-Legendre is exact to rounding for kappa <= ~50
  Eigen::VectorXd x, w;
  field::gauss_legendre(200, x, w);
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    const double t = 0.5 * M_PI * (x(i) + 1.0);
    const double st = std::sin(0.5 * t);
    s += w(i) * std::exp(kappa * (0.5 + std::cos(t))) * st * st;
  }
  return (2.0 / M_PI) * (0.5 * M_PI) * s;
}

double vmf_normalizer_3d(double kappa, const EulerGrid& grid) {
  ScalarField e(grid.size());
  const so3::Mat3 id = so3::Mat3::Identity();
  for (int q = 0; q < grid.size(); ++q) {
    e(q) = std::exp(kappa * so3::dot_half(grid.node(q), id));
  }
  return grid.integrate(e);
}

VmfParams::VmfParams(double nu0_, double d_, const EulerGrid& grid) : nu0(nu0_), d(d_) {
  if (nu0 <= 0.0 || d <= 0.0) throw Error("VmfParams: nu0 and d must be positive");
  kappa = nu0 / d;
  const double z1 = vmf_normalizer_1d(kappa);
  const double z3 = vmf_normalizer_3d(kappa, grid);
  if (std::abs(z1 - z3) > 1e-6 * z1) {
    throw QuadratureMismatch("vmf normalizer: 1D and 3D quadratures disagree (grid too coarse): " +
                             std::to_string(z1) + " vs " + std::to_string(z3));
  }
  z = z1;
}

double vmf_value(const VmfParams& p, const Rotation& lambda, const Mat3& a) {
  return std::exp(p.kappa * so3::dot_half(a, lambda.matrix())) / p.z;
}

ScalarField vmf_density(const VmfParams& p, const Rotation& lambda, const EulerGrid& grid) {
  ScalarField m(grid.size());
  for (int q = 0; q < grid.size(); ++q) m(q) = vmf_value(p, lambda, grid.node(q));
  return m;
}

Mat3 flux_lambda(const EulerGrid& grid, const ScalarField& f) {
  Mat3 acc = Mat3::Zero();
  const Eigen::VectorXd& w = grid.weights();
  for (int q = 0; q < grid.size(); ++q) acc += (w(q) * f(q)) * grid.node(q);
  return acc;
}

Rotation mean_attitude(const EulerGrid& grid, const ScalarField& f) {
  return so3::polar_decompose(flux_lambda(grid, f));
}

void attitude_derivatives(const EulerGrid& grid, double rho0, const Rotation& lambda0,
                          const ScalarField& f1, double c1, Mat3& first, Mat3& second) {
  if (rho0 <= 0.0) throw Error("attitude_derivatives: rho0 must be positive");
  const Mat3 lam1 = flux_lambda(grid, f1);
  const double c = c1 * rho0;
  first = so3::tangent_projection(lambda0, lam1) / c;
  const Mat3 b = lambda0.matrix().transpose() * lam1;
  const Mat3 s = 0.5 * (b + b.transpose());
  second = lambda0.matrix() * (3.0 * s * s - b.transpose() * b - 2.0 * b * s) / (c * c);
}

}  // namespace attitude::vmf
