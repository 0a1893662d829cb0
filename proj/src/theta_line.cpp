#include "attitude/theta_line.hpp"

#include <cmath>

namespace attitude::gci {

ThetaGrid::ThetaGrid(int n) {
  Eigen::VectorXd x, wx;
  field::gauss_legendre(n, x, wx);
  theta.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    theta(i) = 0.5 * M_PI * (x(i) + 1.0);
    w(i) = 0.5 * M_PI * wx(i);
  }
}

double weight_m(double theta, const VmfParams& p) {
  return std::exp(p.kappa * (0.5 + std::cos(theta))) / p.z;
}

double weight_mtilde(double theta, const VmfParams& p, const GciSolution& g) {
  const double s = std::sin(theta);
  return p.nu0 * s * s * weight_m(theta, p) * g.psi_tilde(theta);
}

double GciSolution::psi_bar(double mu) const {
  const double c = std::min(1.0, std::max(-1.0, mu - 0.5));
  return spline_(std::acos(c));
}

namespace {

/// One flux-form solve at resolution n; returns psi on interior nodes j=1..n-1.
Eigen::VectorXd solve_inner(const VmfParams& p, int n, double* residual) {
  const double h = M_PI / n;
  const int m = n - 1;
  auto mfun = [&](double t) { return std::exp(p.kappa * (0.5 + std::cos(t))); };
  auto pfun = [&](double t) {
    const double s = std::sin(0.5 * t);
    return s * s * mfun(t);
  };
  Eigen::VectorXd lo(m - 1), di(m), up(m - 1), rhs(m);
  Eigen::VectorXd plo(m), phi(m), qv(m), th(m);
  for (int j = 1; j <= m; ++j) {
    const double t = j * h;
    th(j - 1) = t;
    plo(j - 1) = pfun(t - 0.5 * h) / (h * h);
    phi(j - 1) = pfun(t + 0.5 * h) / (h * h);
    qv(j - 1) = 0.5 * mfun(t);
    rhs(j - 1) = mfun(t) * std::sin(t) * std::pow(std::sin(0.5 * t), 2);
    di(j - 1) = -(plo(j - 1) + phi(j - 1)) - qv(j - 1);
    if (j < m) up(j - 1) = phi(j - 1);
    if (j > 1) lo(j - 2) = plo(j - 1);
  }
  Eigen::VectorXd u;
  try {
    u = num::thomas_solve(lo, di, up, rhs);
  } catch (const std::runtime_error&) {
    throw SolverSingular("solve_psi0: discrete boundary-value system is singular");
  }
  if (!u.allFinite()) throw SolverSingular("solve_psi0: non-finite solution");
  if (residual) {
    // re-assemble the stencil from the recovered psi values (round trip)
    Eigen::VectorXd psi = u.array() / th.array().sin();
    Eigen::VectorXd u2 = psi.array() * th.array().sin();
    double rn = 0.0, bn = 0.0;
    for (int j = 1; j <= m; ++j) {
      const double um = (j > 1) ? u2(j - 2) : 0.0;
      const double up2 = (j < m) ? u2(j) : 0.0;
      const double r =
          plo(j - 1) * um + di(j - 1) * u2(j - 1) + phi(j - 1) * up2 - rhs(j - 1);
      rn += r * r;
      bn += rhs(j - 1) * rhs(j - 1);
    }
    *residual = std::sqrt(rn / bn);
  }
  return u.array() / th.array().sin();
}

}  // namespace

GciSolution solve_psi0(const VmfParams& p, int n) {
  if (n < 64) throw Error("solve_psi0: need n >= 64");
  if (n % 2 != 0) ++n;
  double residual = 0.0;
  const Eigen::VectorXd psi_n = solve_inner(p, n, &residual);
  const Eigen::VectorXd psi_2n = solve_inner(p, 2 * n, nullptr);
  GciSolution g;
  g.nodes_.resize(n - 1);
  g.values_.resize(n - 1);
  double sup = 0.0;
  for (int j = 1; j < n; ++j) {
    g.nodes_(j - 1) = j * M_PI / n;
    const double fine = psi_2n(2 * j - 1);  // node 2j on the 2n-grid
    sup = std::max(sup, std::abs(psi_n(j - 1) - fine));
    g.values_(j - 1) = (4.0 * fine - psi_n(j - 1)) / 3.0;
  }
  g.residual_ = residual;
  g.convergence_ = sup;
  g.sign_definite_ = (g.values_.maxCoeff() < 0.0) || (g.values_.minCoeff() > 0.0);
  g.spline_ = num::CubicSpline(g.nodes_, g.values_);
  return g;
}

double compute_c1(const VmfParams& p) {
  ThetaGrid tg(200);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < tg.theta.size(); ++i) {
    const double t = tg.theta(i);
    const double s = std::sin(0.5 * t);
    const double wgt = tg.w(i) * weight_m(t, p) * s * s;
    num += wgt * (0.5 + std::cos(t));
    den += wgt;
  }
  return (2.0 / 3.0) * num / den;
}

void compute_c2_c3_c4(const VmfParams& p, const GciSolution& g, double& c2, double& c3,
                      double& c4) {
  // composite Simpson on the solver's uniform grid; integrand vanishes at both ends
  const int m = static_cast<int>(g.nodes().size());
  const int n = m + 1;
  const double h = M_PI / n;
  double den = 0.0, n2 = 0.0, n3 = 0.0, n4 = 0.0;
  for (int j = 1; j < n; ++j) {
    const double t = g.nodes()(j - 1);
    const double s = std::sin(0.5 * t);
    const double mt = p.nu0 * std::pow(std::sin(t), 2) * weight_m(t, p) * g.values()(j - 1);
    const double wgt = ((j % 2 == 1) ? 4.0 : 2.0) / 3.0 * h * mt * s * s;
    den += wgt;
    n2 += wgt * (2.0 + 3.0 * std::cos(t)) / 5.0;
    n3 += wgt / p.nu0;
    n4 += wgt * (1.0 - std::cos(t)) / 5.0;
  }
  if (std::abs(den) < 1e-12) {
    throw DegenerateWeight("compute_c2_c3_c4: normalization integral of m~ is degenerate");
  }
  c2 = n2 / den;
  c3 = p.d * n3 / den;
  c4 = n4 / den;
}

double stability_margin(double d, const VmfParams& p, double c1, double lambda0) {
  if (c1 <= 0.0 || lambda0 <= 0.0) throw Error("stability_margin: need c1 > 0 and lambda0 > 0");
  return d - 25.0 * std::pow(3.0, 0.25) * p.nu0 / (c1 * lambda0);
}

CoefficientSet compute_coefficients(const VmfParams& p, const GciSolution& g, double lambda0) {
  CoefficientSet c;
  c.c1 = compute_c1(p);
  compute_c2_c3_c4(p, g, c.c2, c.c3, c.c4);
  c.lambda0 = lambda0;
  c.d_star = stability_margin(p.d, p, c.c1, lambda0);
  return c;
}

}  // namespace attitude::gci
