#include "attitude/euler_grid.hpp"

#include <cmath>

namespace attitude::field {

namespace {

so3::Mat3 rot_z(double a) {
  so3::Mat3 m;
  const double c = std::cos(a), s = std::sin(a);
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

so3::Mat3 rot_y(double b) {
  so3::Mat3 m;
  const double c = std::cos(b), s = std::sin(b);
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

/// Fourier differentiation matrix on n uniform periodic nodes (n even).
Eigen::MatrixXd fourier_diff(int n) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const int k = i - j;
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      d(i, j) = 0.5 * sign / std::tan(M_PI * k / n);
    }
  }
  return d;
}

/// Barycentric polynomial differentiation matrix on arbitrary distinct nodes.
Eigen::MatrixXd poly_diff(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd c = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) c(i) *= x(i) - x(j);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      d(i, j) = (c(i) / c(j)) / (x(i) - x(j));
      row += d(i, j);
    }
    d(i, i) = -row;
  }
  return d;
}

}  // namespace

void gauss_legendre(int n, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  x.resize(n);
  w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x(i) = -z;
    x(n - 1 - i) = z;
    w(i) = 2.0 / ((1.0 - z * z) * pp * pp);
    w(n - 1 - i) = w(i);
  }
}

EulerGrid::EulerGrid(int na, int nb, int ng) : na_(na), nb_(nb), ng_(ng), n_(na * nb * ng) {
  if (na < 8 || ng < 8 || na % 2 != 0 || ng % 2 != 0 || nb < 4) {
    throw GridTooCoarse("EulerGrid: need n_alpha, n_gamma >= 8 even and n_beta >= 4");
  }
  alpha_.resize(na);
  for (int i = 0; i < na; ++i) alpha_(i) = 2.0 * M_PI * i / na;
  gamma_.resize(ng);
  for (int i = 0; i < ng; ++i) gamma_(i) = 2.0 * M_PI * i / ng;
  gauss_legendre(nb, u_, wu_);
  beta_ = u_.array().acos();
  sinb_ = (1.0 - u_.array().square()).sqrt();

  w_.resize(n_);
  nodes_.resize(n_);
  for (int ia = 0; ia < na; ++ia) {
    const so3::Mat3 ra = rot_z(alpha_(ia));
    for (int ib = 0; ib < nb; ++ib) {
      const so3::Mat3 rab = ra * rot_y(beta_(ib));
      for (int ig = 0; ig < ng; ++ig) {
        const int q = index(ia, ib, ig);
        nodes_[q] = rab * rot_z(gamma_(ig));
        w_(q) = wu_(ib) / (2.0 * na * ng);
      }
    }
  }

  da_ = fourier_diff(na);
  dg_ = fourier_diff(ng);
  du_ = poly_diff(u_);
  cosg_ = gamma_.array().cos();
  sing_ = gamma_.array().sin();

  // alpha/gamma Nyquist checkerboards: w-orthonormal, orthogonal to constants
  ScalarField ca(n_), cg(n_), cag(n_);
  for (int ia = 0; ia < na; ++ia)
    for (int ib = 0; ib < nb; ++ib)
      for (int ig = 0; ig < ng; ++ig) {
        const int q = index(ia, ib, ig);
        const double sa = (ia % 2 == 0) ? 1.0 : -1.0;
        const double sg = (ig % 2 == 0) ? 1.0 : -1.0;
        ca(q) = sa;
        cg(q) = sg;
        cag(q) = sa * sg;
      }
  chi_ = {ca, cg, cag};
  const double pa = (na / 2.0) * (na / 2.0);
  const double pg = (ng / 2.0) * (ng / 2.0);
  pen_ = {pa, pg, pa + pg};
}

double EulerGrid::integrate(const ScalarField& f) const { return w_.dot(f); }

Eigen::Vector3d EulerGrid::checkerboard_amplitudes(const ScalarField& h) const {
  Eigen::Vector3d a;
  for (int i = 0; i < 3; ++i) a(i) = w_.cwiseProduct(chi_[i]).dot(h);
  return a;
}

ScalarField EulerGrid::apply_alpha(const Eigen::MatrixXd& m, const ScalarField& f) const {
  // field viewed as na x (nb*ng) row-major
  using RM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RM> x(f.data(), na_, nb_ * ng_);
  ScalarField out(n_);
  Eigen::Map<RM> y(out.data(), na_, nb_ * ng_);
  y.noalias() = m * x;
  return out;
}

ScalarField EulerGrid::apply_gamma(const Eigen::MatrixXd& m, const ScalarField& f) const {
  // field viewed as (na*nb) x ng row-major; y_row = m * x_row  =>  Y = X m^T
  using RM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RM> x(f.data(), na_ * nb_, ng_);
  ScalarField out(n_);
  Eigen::Map<RM> y(out.data(), na_ * nb_, ng_);
  y.noalias() = x * m.transpose();
  return out;
}

ScalarField EulerGrid::apply_beta(const Eigen::MatrixXd& m, const ScalarField& f) const {
  using RM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  ScalarField out(n_);
  for (int ia = 0; ia < na_; ++ia) {
    Eigen::Map<const RM> x(f.data() + ia * nb_ * ng_, nb_, ng_);
    Eigen::Map<RM> y(out.data() + ia * nb_ * ng_, nb_, ng_);
    y.noalias() = m * x;
  }
  return out;
}

ScalarField EulerGrid::shift_half(const ScalarField& f) const {
  // S f(alpha, beta, gamma) = f(alpha + pi, beta, gamma + pi); involution.
  ScalarField out(n_);
  const int ha = na_ / 2, hg = ng_ / 2;
  for (int ia = 0; ia < na_; ++ia) {
    const int ja = (ia + ha) % na_;
    for (int ib = 0; ib < nb_; ++ib) {
      for (int ig = 0; ig < ng_; ++ig) {
        const int jg = (ig + hg) % ng_;
        out(index(ia, ib, ig)) = f(index(ja, ib, jg));
      }
    }
  }
  return out;
}

namespace {
/// Multiply by per-beta-node values: out(q) = v(ib) * f(q).
ScalarField scale_beta(int na, int nb, int ng, const Eigen::VectorXd& v, const ScalarField& f) {
  ScalarField out(f.size());
  for (int ia = 0; ia < na; ++ia)
    for (int ib = 0; ib < nb; ++ib) {
      const int base = (ia * nb + ib) * ng;
      out.segment(base, ng) = v(ib) * f.segment(base, ng);
    }
  return out;
}

/// Multiply by per-gamma-node values.
ScalarField scale_gamma(int na, int nb, int ng, const Eigen::VectorXd& v, const ScalarField& f) {
  ScalarField out(f.size());
  for (int line = 0; line < na * nb; ++line) {
    out.segment(line * ng, ng) = f.segment(line * ng, ng).cwiseProduct(v);
  }
  return out;
}
}  // namespace

ScalarField EulerGrid::d_beta(const ScalarField& f) const {
  // Even part is a polynomial in u = cos(beta); odd part is sin(beta) * poly(u).
  const ScalarField sf = shift_half(f);
  const ScalarField fp = 0.5 * (f + sf);
  const ScalarField fm = 0.5 * (f - sf);
  const ScalarField dfp = scale_beta(na_, nb_, ng_, -sinb_, apply_beta(du_, fp));
  const ScalarField q = scale_beta(na_, nb_, ng_, sinb_.cwiseInverse(), fm);
  const Eigen::VectorXd one_m_u2 = (1.0 - u_.array().square()).matrix();
  const ScalarField dfm =
      scale_beta(na_, nb_, ng_, u_, q) - scale_beta(na_, nb_, ng_, one_m_u2, apply_beta(du_, q));
  return dfp + dfm;
}

ScalarField EulerGrid::d_beta_transpose(const ScalarField& t) const {
  // transpose of d_beta = P+ L+^T + P- L-^T with
  //   L+ = -diag(sinb) Du,  L- = (diag(u) - diag(1-u^2) Du) diag(1/sinb)
  const Eigen::VectorXd one_m_u2 = (1.0 - u_.array().square()).matrix();
  const Eigen::MatrixXd dut = du_.transpose();
  const ScalarField t1 = -apply_beta(dut, scale_beta(na_, nb_, ng_, sinb_, t));
  const ScalarField t2 = scale_beta(
      na_, nb_, ng_, sinb_.cwiseInverse(),
      scale_beta(na_, nb_, ng_, u_, t) - apply_beta(dut, scale_beta(na_, nb_, ng_, one_m_u2, t)));
  const ScalarField s1 = shift_half(t1);
  const ScalarField s2 = shift_half(t2);
  return 0.5 * (t1 + s1) + 0.5 * (t2 - s2);
}

TangentField EulerGrid::grad(const ScalarField& f) const {
  const ScalarField fa = apply_alpha(da_, f);
  const ScalarField fg = apply_gamma(dg_, f);
  const ScalarField fb = d_beta(f);
  const Eigen::VectorXd isb = sinb_.cwiseInverse();
  const Eigen::VectorXd cotb = u_.cwiseProduct(isb);
  const ScalarField fa_s = scale_beta(na_, nb_, ng_, isb, fa);
  const ScalarField fg_s = scale_beta(na_, nb_, ng_, cotb, fg);
  TangentField out(n_, 3);
  out.col(0) = -scale_gamma(na_, nb_, ng_, cosg_, fa_s) + scale_gamma(na_, nb_, ng_, sing_, fb) +
               scale_gamma(na_, nb_, ng_, cosg_, fg_s);
  out.col(1) = scale_gamma(na_, nb_, ng_, sing_, fa_s) + scale_gamma(na_, nb_, ng_, cosg_, fb) -
               scale_gamma(na_, nb_, ng_, sing_, fg_s);
  out.col(2) = fg;
  return out;
}

ScalarField EulerGrid::grad_transpose(const TangentField& v) const {
  const Eigen::VectorXd isb = sinb_.cwiseInverse();
  const Eigen::VectorXd cotb = u_.cwiseProduct(isb);
  const ScalarField x1c = scale_gamma(na_, nb_, ng_, cosg_, v.col(0));
  const ScalarField x1s = scale_gamma(na_, nb_, ng_, sing_, v.col(0));
  const ScalarField x2c = scale_gamma(na_, nb_, ng_, cosg_, v.col(1));
  const ScalarField x2s = scale_gamma(na_, nb_, ng_, sing_, v.col(1));
  const ScalarField ta = scale_beta(na_, nb_, ng_, isb, -x1c + x2s);
  const ScalarField tb = x1s + x2c;
  const ScalarField tg = scale_beta(na_, nb_, ng_, cotb, x1c - x2s) + v.col(2);
  return apply_alpha(da_.transpose(), ta) + apply_gamma(dg_.transpose(), tg) +
         d_beta_transpose(tb);
}

ScalarField EulerGrid::div(const TangentField& v) const {
  TangentField wv = v;
  for (int c = 0; c < 3; ++c) wv.col(c) = wv.col(c).cwiseProduct(w_);
  return -grad_transpose(wv).cwiseQuotient(w_);
}

}  // namespace attitude::field
