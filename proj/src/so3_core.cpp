#include "attitude/so3_core.hpp"

#include <cmath>

namespace attitude::so3 {

Mat3 cross_matrix(const Vec3& u) {
  Mat3 m;
  m << 0.0, -u.z(), u.y(),
       u.z(), 0.0, -u.x(),
      -u.y(), u.x(), 0.0;
  return m;
}

Rotation exp_so3(const Vec3& b) {
  const double t2 = b.squaredNorm();
  const double t = std::sqrt(t2);
  double a, c;  // sin(t)/t and (1-cos(t))/t^2
  if (t < 1e-4) {
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    c = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    a = std::sin(t) / t;
    c = (1.0 - std::cos(t)) / t2;
  }
  const Mat3 k = cross_matrix(b);
  Mat3 r = Mat3::Identity() + a * k + c * (k * k);
  return Rotation(r, Rotation::Unchecked{});
}

Vec3 log_so3(const Rotation& rot) {
  const Mat3& r = rot.matrix();
  const double tr = r.trace();
  if (tr <= -1.0 + 1e-12) {
    throw AngleAtPi("log_so3: rotation angle at pi (trace = " + std::to_string(tr) + ")");
  }
  const double ct = std::min(1.0, std::max(-1.0, (tr - 1.0) / 2.0));
  const double t = std::acos(ct);
  // vec(R - R^T)/2 = sin(t) * axis
  Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  double s;  // t / sin(t)
  if (t < 1e-4) {
    const double t2 = t * t;
    s = 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0;
  } else {
    s = t / std::sin(t);
  }
  return 0.5 * s * w;
}

Mat3 tangent_projection(const Rotation& a, const Mat3& m) {
  const Mat3& A = a.matrix();
  return 0.5 * (m - A * m.transpose() * A);
}

Mat3 normal_projection(const Rotation& a, const Mat3& m) {
  const Mat3& A = a.matrix();
  return 0.5 * (m + A * m.transpose() * A);
}

Rotation polar_decompose(const Mat3& m) {
  const double det = m.determinant();
  if (det <= 1e-12) {
    throw SingularFlux("polar_decompose: det = " + std::to_string(det));
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(m.transpose() * m);
  const Vec3 ev = es.eigenvalues();  // ascending
  if (ev(0) <= 0.0 || std::sqrt(ev(0)) <= 1e-12) {
    throw SingularFlux("polar_decompose: smallest singular value too small");
  }
  const Mat3 inv_sqrt = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                        es.eigenvectors().transpose();
  return Rotation(m * inv_sqrt);
}

Vec3 stereo_to_vector(double phi, double theta) {
  const double w = 1.0 + phi * phi + theta * theta;
  return Vec3(2.0 * phi / w, 2.0 * theta / w, (phi * phi + theta * theta - 1.0) / w);
}

void vector_to_stereo(const Vec3& n, double& phi, double& theta) {
  if (std::abs(n.norm() - 1.0) > 1e-10) {
    throw Error("vector_to_stereo: input is not a unit vector");
  }
  if (n.z() >= 1.0 - 1e-9) {
    throw PoleSingularity("vector_to_stereo: north pole excluded from the chart");
  }
  const double d = 1.0 - n.z();
  phi = n.x() / d;
  theta = n.y() / d;
}

void stereo_tangents(double phi, double theta, Vec3& d_phi, Vec3& d_theta) {
  const double w = 1.0 + phi * phi + theta * theta;
  const double w2 = w * w;
  d_phi = Vec3(2.0 * (1.0 - phi * phi + theta * theta) / w2, -4.0 * phi * theta / w2,
               4.0 * phi / w2);
  d_theta = Vec3(-4.0 * phi * theta / w2, 2.0 * (1.0 + phi * phi - theta * theta) / w2,
                 4.0 * theta / w2);
}

StereoCoords frame_to_stereo(const Rotation& lambda) {
  StereoCoords c{};
  for (int i = 0; i < 3; ++i) {
    vector_to_stereo(lambda.col(i), c.phi[i], c.theta[i]);
  }
  return c;
}

void stereo_to_frame(const StereoCoords& c, Vec3& omega, Vec3& u, Vec3& v) {
  omega = stereo_to_vector(c.phi[0], c.theta[0]);
  u = stereo_to_vector(c.phi[1], c.theta[1]);
  v = stereo_to_vector(c.phi[2], c.theta[2]);
}

}  // namespace attitude::so3
