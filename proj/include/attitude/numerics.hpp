#pragma once

// Small shared numerics: natural cubic spline, Thomas solve, conjugate
// gradients with callback operator, deterministic random SO(3) samples,
// simple thread pool over an index range.

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <thread>
#include <vector>

#include "attitude/so3_core.hpp"

namespace attitude::num {

/// Natural cubic spline through (x_i, y_i), x strictly increasing.
/// Evaluation clamps to [x_front, x_back].
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(Eigen::VectorXd x, Eigen::VectorXd y);
  double operator()(double x) const;

 private:
  Eigen::VectorXd x_, y_, m_;  // m_: second derivatives
};

/// Tridiagonal solve (Thomas algorithm); diagonals lo(1..n-1), di(0..n-1), up(0..n-2).
Eigen::VectorXd thomas_solve(const Eigen::VectorXd& lo, const Eigen::VectorXd& di,
                             const Eigen::VectorXd& up, Eigen::VectorXd rhs);

struct CgResult {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

/// Preconditioned CG for SPD operator given as a callback. x holds the initial
/// guess on input and the solution on output. precond may be empty (identity).
CgResult conjugate_gradient(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& a,
                            const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol, int maxit,
                            const Eigen::VectorXd* jacobi = nullptr);

/// Uniform random rotation (quaternion method), deterministic per generator state.
so3::Rotation random_rotation(std::mt19937_64& gen);

/// Random antisymmetric matrix with N(0,1) generator components.
so3::Mat3 random_antisym(std::mt19937_64& gen);

/// Runs fn(i) for i in [0, n) on up to nthreads threads (blocks until done).
/// Work is split in contiguous chunks; fn must only touch disjoint state per i.
void parallel_for(int n, int nthreads, const std::function<void(int)>& fn);

/// Thread count: explicit override > ATTITUDE_HYDRO_THREADS env > hardware.
int resolve_threads(int requested);

/// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace attitude::num
