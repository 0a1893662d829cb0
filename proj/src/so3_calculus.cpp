#include "attitude/so3_calculus.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace attitude::field {

FokkerPlanck::FokkerPlanck(const EulerGrid& grid, ScalarField m, double d)
    : grid_(&grid), m_(std::move(m)), d_(d) {
  if (m_.minCoeff() <= 0.0) throw Error("FokkerPlanck: density must be strictly positive");
  wm_ = grid.weights().cwiseProduct(m_);
}

ScalarField FokkerPlanck::stiffness_apply(const ScalarField& h) const {
  TangentField g = grid_->grad(h);
  for (int c = 0; c < 3; ++c) g.col(c) = g.col(c).cwiseProduct(wm_);
  ScalarField out = grid_->grad_transpose(g);
  const Eigen::Vector3d a = grid_->checkerboard_amplitudes(h);
  for (int i = 0; i < 3; ++i) {
    out += (grid_->checkerboard_penalties()[i] * a(i)) *
           grid_->weights().cwiseProduct(grid_->checkerboards()[i]);
  }
  return out;
}

ScalarField FokkerPlanck::apply(const ScalarField& f) const {
  const ScalarField h = f.cwiseQuotient(m_);
  return (-d_) * stiffness_apply(h).cwiseQuotient(grid_->weights());
}

double FokkerPlanck::dirichlet(const ScalarField& h1, const ScalarField& h2) const {
  const TangentField g1 = grid_->grad(h1);
  const TangentField g2 = grid_->grad(h2);
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += g1.col(c).cwiseProduct(wm_).dot(g2.col(c));
  const Eigen::Vector3d a1 = grid_->checkerboard_amplitudes(h1);
  const Eigen::Vector3d a2 = grid_->checkerboard_amplitudes(h2);
  for (int i = 0; i < 3; ++i) s += grid_->checkerboard_penalties()[i] * a1(i) * a2(i);
  return s;
}

double FokkerPlanck::dissipation(const ScalarField& f) const {
  const ScalarField h = f.cwiseQuotient(m_);
  return -d_ * dirichlet(h, h);
}

Eigen::MatrixXd FokkerPlanck::dense_operator() const {
  const int n = grid_->size();
  if (n > 4200) throw Error("dense_operator: grid too large for dense assembly");
  Eigen::MatrixXd out(n, n);
  ScalarField e = ScalarField::Zero(n);
  for (int j = 0; j < n; ++j) {
    e(j) = 1.0;
    out.col(j) = apply(e);
    e(j) = 0.0;
  }
  return out;
}

Eigen::MatrixXd FokkerPlanck::dense_stiffness() const {
  const int n = grid_->size();
  if (n > 4200) throw Error("dense_stiffness: grid too large for dense assembly");
  Eigen::MatrixXd out(n, n);
  ScalarField e = ScalarField::Zero(n);
  for (int j = 0; j < n; ++j) {
    e(j) = 1.0;
    out.col(j) = stiffness_apply(e);
    e(j) = 0.0;
  }
  return out;
}

double poincare_constant(const EulerGrid& grid, const so3::Rotation& lambda,
                         const vmf::VmfParams& params) {
  const int n = grid.size();
  if (n > 4200) {
    throw Error("poincare_constant: dense eigen-solve capped at 4200 nodes; use a coarser grid");
  }
  FokkerPlanck op(grid, vmf::vmf_density(params, lambda, grid), params.d);
  Eigen::MatrixXd k = op.dense_stiffness();
  const Eigen::VectorXd wm = grid.weights().cwiseProduct(op.density());
  const Eigen::VectorXd s = wm.cwiseSqrt().cwiseInverse();
  // symmetric similarity  B^{-1/2} K B^{-1/2}
  for (int i = 0; i < n; ++i) k.row(i) *= s(i);
  for (int j = 0; j < n; ++j) k.col(j) *= s(j);
  k = 0.5 * (k + k.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  if (std::abs(ev(0)) > 1e-8) throw DegenerateKernel("poincare_constant: no zero mode found");
  if (ev(1) < 1e-10) {
    throw DegenerateKernel("poincare_constant: discrete kernel not one-dimensional");
  }
  return ev(1);
}

void export_dense_operator(const std::string& path, const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw Error("export_dense_operator: matrix must be square");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("export_dense_operator: cannot open " + path);
  const char magic[8] = {'S', 'O', '3', 'O', 'P', 'E', 'R', '1'};
  os.write(magic, 8);
  const std::uint64_t n = static_cast<std::uint64_t>(m.rows());
  os.write(reinterpret_cast<const char*>(&n), 8);
  // row-major payload
  for (int i = 0; i < m.rows(); ++i) {
    Eigen::VectorXd row = m.row(i);
    os.write(reinterpret_cast<const char*>(row.data()), sizeof(double) * m.cols());
  }
  if (!os) throw Error("export_dense_operator: write failed for " + path);
}

Eigen::MatrixXd import_dense_operator(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("import_dense_operator: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (std::memcmp(magic, "SO3OPER1", 8) != 0) throw Error("import_dense_operator: bad magic");
  std::uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), 8);
  Eigen::MatrixXd m(n, n);
  std::vector<double> row(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    is.read(reinterpret_cast<char*>(row.data()), sizeof(double) * n);
    for (std::uint64_t j = 0; j < n; ++j) m(i, j) = row[j];
  }
  if (!is) throw Error("import_dense_operator: truncated file " + path);
  return m;
}

}  // namespace attitude::field
