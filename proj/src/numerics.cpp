#include "attitude/numerics.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace attitude::num {

CubicSpline::CubicSpline(Eigen::VectorXd x, Eigen::VectorXd y) : x_(std::move(x)), y_(std::move(y)) {
  const int n = static_cast<int>(x_.size());
  m_ = Eigen::VectorXd::Zero(n);
  if (n < 3) return;
  Eigen::VectorXd lo(n - 2), di(n - 2), up(n - 2), rhs(n - 2);
  for (int i = 1; i < n - 1; ++i) {
    const double h0 = x_(i) - x_(i - 1);
    const double h1 = x_(i + 1) - x_(i);
    lo(i - 1) = h0 / 6.0;
    di(i - 1) = (h0 + h1) / 3.0;
    up(i - 1) = h1 / 6.0;
    rhs(i - 1) = (y_(i + 1) - y_(i)) / h1 - (y_(i) - y_(i - 1)) / h0;
  }
  m_.segment(1, n - 2) = thomas_solve(lo, di, up, rhs);
}

double CubicSpline::operator()(double x) const {
  const int n = static_cast<int>(x_.size());
  x = std::min(std::max(x, x_(0)), x_(n - 1));
  int lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (x_(mid) <= x ? lo : hi) = mid;
  }
  const double h = x_(hi) - x_(lo);
  const double a = (x_(hi) - x) / h;
  const double b = (x - x_(lo)) / h;
  return a * y_(lo) + b * y_(hi) +
         ((a * a * a - a) * m_(lo) + (b * b * b - b) * m_(hi)) * h * h / 6.0;
}

Eigen::VectorXd thomas_solve(const Eigen::VectorXd& lo, const Eigen::VectorXd& di,
                             const Eigen::VectorXd& up, Eigen::VectorXd rhs) {
  const int n = static_cast<int>(di.size());
  Eigen::VectorXd c(n);
  c(0) = up.size() > 0 ? up(0) / di(0) : 0.0;
  rhs(0) /= di(0);
  for (int i = 1; i < n; ++i) {
    const double m = di(i) - lo(i - 1) * c(i - 1);
    if (m == 0.0) throw std::runtime_error("thomas_solve: singular system");
    if (i < n - 1) c(i) = up(i) / m;
    rhs(i) = (rhs(i) - lo(i - 1) * rhs(i - 1)) / m;
  }
  for (int i = n - 2; i >= 0; --i) rhs(i) -= c(i) * rhs(i + 1);
  return rhs;
}

CgResult conjugate_gradient(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& a,
                            const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol, int maxit,
                            const Eigen::VectorXd* jacobi) {
  CgResult res;
  const double nb = b.norm();
  if (nb == 0.0) {
    x.setZero();
    res.converged = true;
    return res;
  }
  Eigen::VectorXd r = b - a(x);
  Eigen::VectorXd z = jacobi ? r.cwiseQuotient(*jacobi).eval() : r;
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (int it = 0; it < maxit; ++it) {
    const Eigen::VectorXd ap = a(p);
    const double pap = p.dot(ap);
    if (pap <= 0.0) break;  // operator not SPD along p (rounding); bail out
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    res.iterations = it + 1;
    res.rel_residual = r.norm() / nb;
    if (res.rel_residual < tol) {
      res.converged = true;
      return res;
    }
    z = jacobi ? r.cwiseQuotient(*jacobi).eval() : r;
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  res.rel_residual = (b - a(x)).norm() / nb;
  res.converged = res.rel_residual < tol;
  return res;
}

so3::Rotation random_rotation(std::mt19937_64& gen) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::Vector4d q;
  for (int i = 0; i < 4; ++i) q(i) = nd(gen);
  q.normalize();
  const double w = q(0), x = q(1), y = q(2), z = q(3);
  so3::Mat3 m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return so3::Rotation(m, so3::Rotation::Unchecked{});
}

so3::Mat3 random_antisym(std::mt19937_64& gen) {
  std::normal_distribution<double> nd(0.0, 1.0);
  return so3::cross_matrix(so3::Vec3(nd(gen), nd(gen), nd(gen)));
}

void parallel_for(int n, int nthreads, const std::function<void(int)>& fn) {
  nthreads = std::max(1, std::min(nthreads, n));
  if (nthreads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  const int chunk = (n + nthreads - 1) / nthreads;
  for (int t = 0; t < nthreads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ATTITUDE_HYDRO_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace attitude::num
