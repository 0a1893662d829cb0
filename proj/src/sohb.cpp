#include "attitude/sohb.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace attitude::sohb {

SpatialGrid::SpatialGrid(int dim_, int cells_, double length_)
    : dim(dim_), cells(cells_), length(length_) {
  if (dim != 1 && dim != 3) throw Error("SpatialGrid: dim must be 1 or 3");
  if (cells < 16) throw Error("SpatialGrid: need >= 16 cells per active axis");
  if (length <= 0.0) throw Error("SpatialGrid: length must be positive");
}

int SpatialGrid::total() const { return dim == 1 ? cells : cells * cells * cells; }

int SpatialGrid::index(int i, int j, int k) const {
  return dim == 1 ? i : (i * cells + j) * cells + k;
}

void SpatialGrid::coords(int c, int& i, int& j, int& k) const {
  if (dim == 1) {
    i = c;
    j = k = 0;
  } else {
    k = c % cells;
    j = (c / cells) % cells;
    i = c / (cells * cells);
  }
}

int SpatialGrid::neighbor(int c, int axis, int shift) const {
  int i, j, k;
  coords(c, i, j, k);
  auto wrap = [this](int v) { return ((v % cells) + cells) % cells; };
  if (axis == 0) i = wrap(i + shift);
  if (axis == 1) j = wrap(j + shift);
  if (axis == 2) k = wrap(k + shift);
  return index(i, j, k);
}

namespace {

struct ChartCell {
  double w1, w2;  // W1 and W1^2
  Vec3 omega, d_phi, d_theta;
};

ChartCell chart(double phi1, double theta1) {
  ChartCell c;
  c.w1 = 1.0 + phi1 * phi1 + theta1 * theta1;
  c.w2 = c.w1 * c.w1;
  c.omega = so3::stereo_to_vector(phi1, theta1);
  so3::stereo_tangents(phi1, theta1, c.d_phi, c.d_theta);
  return c;
}

/// Chart data for all three columns of the frame.
struct FullChart {
  Vec3 col[3];            // Omega, u, v
  Vec3 dp[3], dt[3];      // phi/theta tangents per column
  double w2[3];           // W_i^2
};

FullChart full_chart(const Eigen::Matrix<double, 7, 1>& u) {
  FullChart c;
  for (int i = 0; i < 3; ++i) {
    const double phi = u(1 + 2 * i), theta = u(2 + 2 * i);
    const double w = 1.0 + phi * phi + theta * theta;
    c.w2[i] = w * w;
    c.col[i] = so3::stereo_to_vector(phi, theta);
    so3::stereo_tangents(phi, theta, c.dp[i], c.dt[i]);
  }
  return c;
}

/// Pencil speed bound at one cell along one axis via Gershgorin discs of
/// A0^{-1/2} A^i A0^{-1/2}.
double gershgorin_speed(const Eigen::Matrix<double, 7, 1>& u, const CoefficientSet& c, int axis) {
  Eigen::Matrix<double, 7, 7> a0;
  std::array<Eigen::Matrix<double, 7, 7>, 3> ai;
  assemble_matrices(u, c, a0, ai);
  Eigen::Matrix<double, 7, 1> s = a0.diagonal().cwiseSqrt().cwiseInverse();
  double vmax = 0.0;
  for (int r = 0; r < 7; ++r) {
    double row = 0.0;
    for (int col = 0; col < 7; ++col) row += std::abs(s(r) * ai[axis](r, col) * s(col));
    vmax = std::max(vmax, row);
  }
  return vmax;
}

}  // namespace

void assemble_matrices(const Eigen::Matrix<double, 7, 1>& u_cell, const CoefficientSet& c,
                       Eigen::Matrix<double, 7, 7>& a0, std::array<Eigen::Matrix<double, 7, 7>, 3>& ai) {
  const double rho = u_cell(0);
  if (rho <= 0.0) throw NonPositiveDensity("assemble_matrices: rho <= 0");
  const ChartCell ch = chart(u_cell(1), u_cell(2));
  const double k3 = c.c1 * rho / (c.c3 * ch.w2);  // K3 = diag(1, k3, k3)
  a0.setZero();
  a0(0, 0) = 1.0;
  a0(1, 1) = a0(2, 2) = 4.0 * c.c1 * rho * rho / (c.c3 * ch.w2);
  for (int m = 3; m < 7; ++m) a0(m, m) = 4.0 * rho;
  for (int x = 0; x < 3; ++x) {
    auto& a = ai[x];
    a.setZero();
    const double om = ch.omega(x), dph = ch.d_phi(x), dth = ch.d_theta(x);
    // B3~ = K3 B3: symmetric by construction
    a(0, 0) = c.c1 * om;
    a(0, 1) = a(1, 0) = c.c1 * rho * dph;
    a(0, 2) = a(2, 0) = c.c1 * rho * dth;
    a(1, 1) = a(2, 2) = k3 * 4.0 * c.c2 * rho * om;
    for (int m = 3; m < 7; ++m) a(m, m) = 4.0 * c.c2 * rho * om;
  }
}

double cfl_speed(const StereoState& s, const CoefficientSet& c) {
  double vmax = 0.0;
  for (int cell = 0; cell < s.grid.total(); ++cell) {
    const Eigen::Matrix<double, 7, 1> u = s.u.row(cell);
    for (int axis = 0; axis < s.grid.dim; ++axis) {
      vmax = std::max(vmax, gershgorin_speed(u, c, axis));
    }
  }
  return vmax;
}

double frame_speed_bound(double omega_axis, const CoefficientSet& c) {
  // speeds: c2*om (x4), and roots of (c1 om - v)(c2 om - v) = c1 c3 (1 - om^2)
  const double om = omega_axis;
  const double k = std::max(0.0, c.c1 * c.c3 * (1.0 - om * om));
  const double b = (c.c1 + c.c2) * om;
  const double disc = std::sqrt(std::max(0.0, (c.c1 - c.c2) * om * (c.c1 - c.c2) * om + 4.0 * k));
  const double r1 = 0.5 * (b + disc), r2 = 0.5 * (b - disc);
  return std::max({std::abs(c.c2 * om), std::abs(r1), std::abs(r2)});
}

double cfl_speed(const FrameState& s, const CoefficientSet& c) {
  double vmax = 0.0;
  for (int cell = 0; cell < s.grid.total(); ++cell) {
    for (int axis = 0; axis < s.grid.dim; ++axis) {
      vmax = std::max(vmax, frame_speed_bound(s.lambda[cell](axis, 0), c));
    }
  }
  return vmax;
}

namespace {

/// Stereo spatial operator: du/dt at every cell (central + reconstructed LLF).
///
/// The chart equations are the full chain-rule reduction of the frame system,
/// with the coupling terms W_i^2/(4 rho) * [...] that keep the reconstructed
/// frame orthogonal. (The reduced system displayed in the source derivation
/// drops them through the false identities Omega . u_phi2 = 0 etc.; those hold
/// for same-column pairs only. See the cross-formulation test and the chart
/// counterexample test.)
Eigen::MatrixXd stereo_rhs(const StereoState& s, const CoefficientSet& c) {
  const SpatialGrid& g = s.grid;
  const int n = g.total();
  const double h = g.dx();
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 7);

  std::vector<FullChart> ch(n);
  for (int cell = 0; cell < n; ++cell) {
    if (s.u(cell, 0) <= 0.0) throw NonPositiveDensity("step_stereo: rho <= 0");
    ch[cell] = full_chart(s.u.row(cell));
  }

  for (int axis = 0; axis < g.dim; ++axis) {
    // MUSCL reconstruction with central slopes, then interface flux/dissipation
    Eigen::MatrixXd slope(n, 7);
    for (int cell = 0; cell < n; ++cell) {
      const int cm = g.neighbor(cell, axis, -1), cp = g.neighbor(cell, axis, +1);
      slope.row(cell) = 0.5 * (s.u.row(cp) - s.u.row(cm));
    }
    for (int cell = 0; cell < n; ++cell) {
      const int cp = g.neighbor(cell, axis, +1);
      // interface cell+1/2: left from cell, right from cp
      Eigen::Matrix<double, 7, 1> ul = s.u.row(cell).transpose() + 0.5 * slope.row(cell).transpose();
      Eigen::Matrix<double, 7, 1> ur = s.u.row(cp).transpose() - 0.5 * slope.row(cp).transpose();
      const double sl = gershgorin_speed(s.u.row(cell), c, axis);
      const double sr = gershgorin_speed(s.u.row(cp), c, axis);
      const double a = std::max(sl, sr);
      // conservative rho flux
      const ChartCell chl = chart(ul(1), ul(2)), chr = chart(ur(1), ur(2));
      const double flux =
          0.5 * c.c1 * (ul(0) * chl.omega(axis) + ur(0) * chr.omega(axis)) - 0.5 * a * (ur(0) - ul(0));
      rhs(cell, 0) -= flux / h;
      rhs(cp, 0) += flux / h;
      // jump dissipation for the non-conservative components
      for (int m = 1; m < 7; ++m) {
        const double d = 0.5 * a * (ur(m) - ul(m));
        rhs(cell, m) += d / h;
        rhs(cp, m) -= d / h;
      }
    }
    // quasilinear central advection at speed c2 Omega^axis
    for (int cell = 0; cell < n; ++cell) {
      const int cm = g.neighbor(cell, axis, -1), cp = g.neighbor(cell, axis, +1);
      const double om = ch[cell].col[0](axis);
      for (int m = 1; m < 7; ++m) {
        const double dq = (s.u(cp, m) - s.u(cm, m)) / (2.0 * h);
        rhs(cell, m) -= c.c2 * om * dq;
      }
    }
  }

  // pointwise coupling terms from the pressure gradient, r and delta
  for (int cell = 0; cell < n; ++cell) {
    const FullChart& cc = ch[cell];
    const double rho = s.u(cell, 0);
    Vec3 grad_rho = Vec3::Zero();
    Eigen::Matrix<double, 6, 3> dq = Eigen::Matrix<double, 6, 3>::Zero();  // grad of phi/theta
    for (int axis = 0; axis < g.dim; ++axis) {
      const int cm = g.neighbor(cell, axis, -1), cp = g.neighbor(cell, axis, +1);
      grad_rho(axis) = (s.u(cp, 0) - s.u(cm, 0)) / (2.0 * h);
      for (int m = 0; m < 6; ++m) dq(m, axis) = (s.u(cp, m + 1) - s.u(cm, m + 1)) / (2.0 * h);
    }
    // column derivatives along space: d(col_i)/d(x_axis)
    Eigen::Matrix3d dcol[3];
    for (int i = 0; i < 3; ++i) {
      for (int axis = 0; axis < 3; ++axis) {
        dcol[i].col(axis) = cc.dp[i] * dq(2 * i, axis) + cc.dt[i] * dq(2 * i + 1, axis);
      }
    }
    double div_col[3];
    for (int i = 0; i < 3; ++i) div_col[i] = dcol[i].trace();
    const Vec3 r = div_col[0] * cc.col[0] + div_col[1] * cc.col[1] + div_col[2] * cc.col[2];
    auto adv = [&](const Vec3& dir, int i) -> Vec3 { return dcol[i] * dir; };  // (dir.grad) col_i
    const double delta = adv(cc.col[0], 1).dot(cc.col[2]) + adv(cc.col[1], 2).dot(cc.col[0]) +
                         adv(cc.col[2], 0).dot(cc.col[1]);
    const Vec3 gvec = c.c3 * grad_rho + c.c4 * rho * r;
    // Omega: rho D_t Omega = -P_{Omega-perp} G; chart tangents span that plane
    rhs(cell, 1) -= cc.w2[0] / (4.0 * rho) * cc.dp[0].dot(gvec);
    rhs(cell, 2) -= cc.w2[0] / (4.0 * rho) * cc.dt[0].dot(gvec);
    // u: rho D_t u = (u.G) Omega - c4 rho delta v
    const Vec3 fu = cc.col[1].dot(gvec) * cc.col[0] - c.c4 * rho * delta * cc.col[2];
    rhs(cell, 3) += cc.w2[1] / (4.0 * rho) * cc.dp[1].dot(fu);
    rhs(cell, 4) += cc.w2[1] / (4.0 * rho) * cc.dt[1].dot(fu);
    // v: rho D_t v = (v.G) Omega + c4 rho delta u
    const Vec3 fv = cc.col[2].dot(gvec) * cc.col[0] + c.c4 * rho * delta * cc.col[1];
    rhs(cell, 5) += cc.w2[2] / (4.0 * rho) * cc.dp[2].dot(fv);
    rhs(cell, 6) += cc.w2[2] / (4.0 * rho) * cc.dt[2].dot(fv);
  }
  return rhs;
}

/// Frame spatial operator.
void frame_rhs(const FrameState& s, const CoefficientSet& c, Eigen::VectorXd& drho,
               std::vector<Mat3>& dlam) {
  const SpatialGrid& g = s.grid;
  const int n = g.total();
  const double h = g.dx();
  drho = Eigen::VectorXd::Zero(n);
  dlam.assign(n, Mat3::Zero());

  for (int axis = 0; axis < g.dim; ++axis) {
    // interface fluxes and dissipation (reconstructed)
    Eigen::VectorXd rslope(n);
    std::vector<Mat3> lslope(n);
    for (int cell = 0; cell < n; ++cell) {
      const int cm = g.neighbor(cell, axis, -1), cp = g.neighbor(cell, axis, +1);
      rslope(cell) = 0.5 * (s.rho(cp) - s.rho(cm));
      lslope[cell] = 0.5 * (s.lambda[cp] - s.lambda[cm]);
    }
    for (int cell = 0; cell < n; ++cell) {
      const int cp = g.neighbor(cell, axis, +1);
      const double rl = s.rho(cell) + 0.5 * rslope(cell);
      const double rr = s.rho(cp) - 0.5 * rslope(cp);
      const Mat3 ll = s.lambda[cell] + 0.5 * lslope[cell];
      const Mat3 lr = s.lambda[cp] - 0.5 * lslope[cp];
      const double a = std::max(frame_speed_bound(s.lambda[cell](axis, 0), c),
                                frame_speed_bound(s.lambda[cp](axis, 0), c));
      const double flux = 0.5 * c.c1 * (rl * ll(axis, 0) + rr * lr(axis, 0)) - 0.5 * a * (rr - rl);
      drho(cell) -= flux / h;
      drho(cp) += flux / h;
      const Mat3 d = 0.5 * a * (lr - ll);
      dlam[cell] += d / h;
      dlam[cp] -= d / h;
    }
  }

  for (int cell = 0; cell < n; ++cell) {
    if (s.rho(cell) <= 0.0) throw NonPositiveDensity("step_frame: rho <= 0");
    const Mat3& lam = s.lambda[cell];
    const Vec3 om = lam.col(0), uu = lam.col(1), vv = lam.col(2);
    // central spatial derivatives per active axis
    Vec3 grad_rho = Vec3::Zero();
    std::array<Mat3, 3> dl{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
    for (int axis = 0; axis < g.dim; ++axis) {
      const int cm = g.neighbor(cell, axis, -1), cp = g.neighbor(cell, axis, +1);
      grad_rho(axis) = (s.rho(cp) - s.rho(cm)) / (2.0 * h);
      dl[axis] = (s.lambda[cp] - s.lambda[cm]) / (2.0 * h);
    }
    auto dcol = [&](int axis, int colidx) -> Vec3 { return dl[axis].col(colidx); };
    auto adv = [&](const Vec3& dir, int colidx) {  // (dir . grad) column
      Vec3 out = Vec3::Zero();
      for (int axis = 0; axis < g.dim; ++axis) out += dir(axis) * dcol(axis, colidx);
      return out;
    };
    double div_om = 0.0, div_u = 0.0, div_v = 0.0;
    for (int axis = 0; axis < g.dim; ++axis) {
      div_om += dl[axis](axis, 0);
      div_u += dl[axis](axis, 1);
      div_v += dl[axis](axis, 2);
    }
    const Vec3 r = div_om * om + div_u * uu + div_v * vv;
    const double delta = adv(om, 1).dot(vv) + adv(uu, 2).dot(om) + adv(vv, 0).dot(uu);
    const Vec3 gvec = c.c3 * grad_rho + c.c4 * s.rho(cell) * r;
    const double rho = s.rho(cell);
    Mat3 dt;
    dt.col(0) = -c.c2 * adv(om, 0) - (gvec - om.dot(gvec) * om) / rho;
    dt.col(1) = -c.c2 * adv(om, 1) + (uu.dot(gvec) / rho) * om - c.c4 * delta * vv;
    dt.col(2) = -c.c2 * adv(om, 2) + (vv.dot(gvec) / rho) * om + c.c4 * delta * uu;
    dlam[cell] += dt;
  }
}

}  // namespace

void step_stereo(StereoState& s, const CoefficientSet& c, double dt, double cfl) {
  const double vmax = cfl_speed(s, c);
  if (vmax > 0.0 && dt > cfl * s.grid.dx() / vmax * (1.0 + 1e-12)) {
    throw CflViolation("step_stereo: dt exceeds CFL limit");
  }
  const Eigen::MatrixXd k1 = stereo_rhs(s, c);
  StereoState mid = s;
  mid.u = s.u + dt * k1;
  const Eigen::MatrixXd k2 = stereo_rhs(mid, c);
  s.u = s.u + 0.5 * dt * (k1 + k2);
  s.t += dt;
  if (s.u.col(0).minCoeff() <= 0.0) throw NonPositiveDensity("step_stereo: rho <= 0 after step");
}

void step_frame(FrameState& s, const CoefficientSet& c, double dt, double cfl) {
  const double vmax = cfl_speed(s, c);
  if (vmax > 0.0 && dt > cfl * s.grid.dx() / vmax * (1.0 + 1e-12)) {
    throw CflViolation("step_frame: dt exceeds CFL limit");
  }
  Eigen::VectorXd dr1, dr2;
  std::vector<Mat3> dl1, dl2;
  frame_rhs(s, c, dr1, dl1);
  FrameState mid = s;
  mid.rho = s.rho + dt * dr1;
  for (int i = 0; i < s.grid.total(); ++i) mid.lambda[i] = s.lambda[i] + dt * dl1[i];
  frame_rhs(mid, c, dr2, dl2);
  s.rho += 0.5 * dt * (dr1 + dr2);
  for (int i = 0; i < s.grid.total(); ++i) s.lambda[i] += 0.5 * dt * (dl1[i] + dl2[i]);
  s.t += dt;
}

double constraint_drift(const FrameState& s) {
  double drift = 0.0;
  for (const Mat3& lam : s.lambda) {
    const Mat3 gram = lam.transpose() * lam - Mat3::Identity();
    drift = std::max(drift, gram.cwiseAbs().maxCoeff());
  }
  return drift;
}

double constraint_drift(const StereoState& s) {
  // columns are unit by construction; orthogonality is the monitored part
  double drift = 0.0;
  for (int cell = 0; cell < s.grid.total(); ++cell) {
    Vec3 om = so3::stereo_to_vector(s.u(cell, 1), s.u(cell, 2));
    Vec3 uu = so3::stereo_to_vector(s.u(cell, 3), s.u(cell, 4));
    Vec3 vv = so3::stereo_to_vector(s.u(cell, 5), s.u(cell, 6));
    drift = std::max({drift, std::abs(om.dot(uu)), std::abs(uu.dot(vv)), std::abs(vv.dot(om))});
  }
  return drift;
}

double mass(const StereoState& s) {
  const double vol = std::pow(s.grid.dx(), s.grid.dim);
  return s.u.col(0).sum() * vol;
}

double mass(const FrameState& s) {
  const double vol = std::pow(s.grid.dx(), s.grid.dim);
  return s.rho.sum() * vol;
}

double min_rho(const StereoState& s) { return s.u.col(0).minCoeff(); }

void reconstruct(const StereoState& s, Eigen::VectorXd& rho, std::vector<Mat3>& lambda) {
  const int n = s.grid.total();
  rho = s.u.col(0);
  lambda.resize(n);
  for (int cell = 0; cell < n; ++cell) {
    Mat3 lam;
    lam.col(0) = so3::stereo_to_vector(s.u(cell, 1), s.u(cell, 2));
    lam.col(1) = so3::stereo_to_vector(s.u(cell, 3), s.u(cell, 4));
    lam.col(2) = so3::stereo_to_vector(s.u(cell, 5), s.u(cell, 6));
    lambda[cell] = lam;
  }
}

InitialData make_initial_data(const InitialPreset& p, const SpatialGrid& g) {
  InitialData d;
  const int n = g.total();
  d.rho.resize(n);
  d.lambda.reserve(n);
  const Rotation base = so3::exp_so3(p.base_angles);
  const double k_rho = 2.0 * M_PI * p.k_rho / g.length;
  const double k_twist = 2.0 * M_PI * p.k_twist / g.length;
  for (int cell = 0; cell < n; ++cell) {
    int i, j, k;
    g.coords(cell, i, j, k);
    const double x = g.x(i);
    if (p.name == "constant") {
      d.rho(cell) = p.rho0;
      d.lambda.push_back(base);
    } else if (p.name == "gaussian-bump-rho") {
      const double mid = 0.5 * g.length;
      d.rho(cell) = p.rho0 * (1.0 + p.amp_rho * std::exp(-0.5 * (x - mid) * (x - mid) /
                                                         (p.sigma * p.sigma)));
      d.lambda.push_back(base);
    } else if (p.name == "twist-lambda") {
      d.rho(cell) = p.rho0 * (1.0 + p.amp_rho * std::cos(k_rho * x));
      const double b = p.amp_twist * std::sin(k_twist * x);
      d.lambda.push_back(Rotation(so3::exp_so3(b * p.axis).matrix() * base.matrix(),
                                  Rotation::Unchecked{}));
    } else {
      throw ConfigError("unknown initial preset: " + p.name);
    }
    if (d.rho(cell) <= 0.0) throw NonPositiveDensity("initial data: rho <= 0");
  }
  return d;
}

Rotation pole_avoiding_rotation(const InitialData& data) {
  auto clearance = [&](const Rotation& r) {
    double worst = 2.0;
    for (const Rotation& lam : data.lambda) {
      const Mat3 m = r.matrix() * lam.matrix();
      for (int col = 0; col < 3; ++col) worst = std::min(worst, 1.0 - m(2, col));
    }
    return worst;  // distance of the worst column from the pole, in 1 - z
  };
  const Rotation id;
  if (clearance(id) > 0.1) return id;
  Rotation best = id;
  double best_clear = clearance(id);
  // deterministic candidate sweep
  for (int ia = 0; ia < 6; ++ia) {
    for (int ib = 1; ib < 6; ++ib) {
      for (int ig = 0; ig < 6; ++ig) {
        const Vec3 a(0, 0, M_PI * ia / 3.0);
        const Vec3 b(0, M_PI * ib / 6.0, 0);
        const Vec3 g(0, 0, M_PI * ig / 3.0);
        const Rotation cand(so3::exp_so3(a).matrix() * so3::exp_so3(b).matrix() *
                                so3::exp_so3(g).matrix(),
                            Rotation::Unchecked{});
        const double cl = clearance(cand);
        if (cl > best_clear) {
          best_clear = cl;
          best = cand;
        }
      }
    }
  }
  if (best_clear <= 1e-3) throw PoleSingularity("pole_avoiding_rotation: no safe rotation found");
  return best;
}

StereoState to_stereo(const InitialData& data, const SpatialGrid& g, const Rotation& pre) {
  StereoState s;
  s.grid = g;
  s.u.resize(g.total(), 7);
  for (int cell = 0; cell < g.total(); ++cell) {
    const Rotation lam(pre.matrix() * data.lambda[cell].matrix(), Rotation::Unchecked{});
    const so3::StereoCoords c = so3::frame_to_stereo(lam);
    s.u(cell, 0) = data.rho(cell);
    for (int i = 0; i < 3; ++i) {
      s.u(cell, 1 + 2 * i) = c.phi[i];
      s.u(cell, 2 + 2 * i) = c.theta[i];
    }
  }
  return s;
}

FrameState to_frame(const InitialData& data, const SpatialGrid& g) {
  FrameState s;
  s.grid = g;
  s.rho = data.rho;
  s.lambda.reserve(g.total());
  for (const Rotation& r : data.lambda) s.lambda.push_back(r.matrix());
  return s;
}

SohbTrajectory run_sohb(const SohbRunConfig& cfg, const CoefficientSet& c) {
  const InitialData data = make_initial_data(cfg.initial, cfg.grid);
  SohbTrajectory traj;
  const bool stereo = cfg.formulation == "stereo";
  if (!stereo && cfg.formulation != "frame") {
    throw ConfigError("run_sohb: formulation must be 'stereo' or 'frame'");
  }
  traj.pre_rotation = stereo ? pole_avoiding_rotation(data) : Rotation();
  StereoState ss;
  FrameState fs;
  if (stereo) {
    ss = to_stereo(data, cfg.grid, traj.pre_rotation);
  } else {
    fs = to_frame(data, cfg.grid);
  }
  const Mat3 undo = traj.pre_rotation.matrix().transpose();

  auto record = [&](double t) {
    Eigen::VectorXd rho;
    std::vector<Mat3> lam;
    double drift;
    if (stereo) {
      reconstruct(ss, rho, lam);
      for (Mat3& m : lam) m = undo * m;
      drift = constraint_drift(ss);
    } else {
      rho = fs.rho;
      lam = fs.lambda;
      drift = constraint_drift(fs);
    }
    traj.times.push_back(t);
    traj.rho.push_back(rho);
    traj.lambda.push_back(lam);
    const double vol = std::pow(cfg.grid.dx(), cfg.grid.dim);
    traj.diagnostics.push_back({t, rho.sum() * vol, rho.minCoeff(), drift});
  };

  record(0.0);
  const double dt_out = cfg.t_end / cfg.outputs;
  double t = 0.0;
  try {
    for (int frame = 1; frame <= cfg.outputs; ++frame) {
      const double t_target = frame * dt_out;
      while (t < t_target - 1e-12) {
        const double vmax = stereo ? cfl_speed(ss, c) : cfl_speed(fs, c);
        double dt = (vmax > 0.0) ? cfg.cfl * cfg.grid.dx() / vmax : (t_target - t);
        dt = std::min(dt, t_target - t);
        if (stereo) {
          step_stereo(ss, c, dt, cfg.cfl);
        } else {
          step_frame(fs, c, dt, cfg.cfl);
        }
        t += dt;
        ++traj.steps_taken;
      }
      record(t);
    }
  } catch (const Error& e) {
    throw Error(std::string(e.what()) + " (run aborted at t = " + std::to_string(t) + ")");
  }
  return traj;
}

void write_sohb_outputs(const SohbTrajectory& traj, const SohbRunConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.out_dir.empty()) return;
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream csv(cfg.out_dir + "/sohb_diagnostics.csv");
    csv << "t,mass,min_rho,max_constraint_drift\n";
    csv.precision(17);
    for (const auto& row : traj.diagnostics) {
      csv << row.t << "," << row.mass << "," << row.min_rho << "," << row.max_constraint_drift
          << "\n";
    }
  }
  for (std::size_t frame = 0; frame < traj.times.size(); ++frame) {
    const std::string base = cfg.out_dir + "/sohb_frame_" + std::to_string(frame);
    std::ofstream bin(base + ".bin", std::ios::binary);
    const int n = cfg.grid.total();
    for (int cell = 0; cell < n; ++cell) {
      double row[10];
      row[0] = traj.rho[frame](cell);
      for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 3; ++col) row[1 + 3 * r + col] = traj.lambda[frame][cell](r, col);
      bin.write(reinterpret_cast<const char*>(row), sizeof(row));
    }
    nlohmann::json meta;
    meta["t"] = traj.times[frame];
    meta["cells"] = n;
    meta["dim"] = cfg.grid.dim;
    meta["length"] = cfg.grid.length;
    meta["layout"] = "per cell: rho, Lambda row-major (10 doubles)";
    meta["variables"] = {"rho", "Lambda"};
    std::ofstream side(base + ".json");
    side << meta.dump(2) << "\n";
  }
}

}  // namespace attitude::sohb
