#pragma once

// Exact linear-algebraic and geometric primitives on 3x3 matrices and the
// rotation group: cross matrices, inner products, exp/log, tangent projection,
// polar decomposition, stereographic coordinates.
//
// Conventions: two inner products are exposed. dot_frobenius(M,N) = sum M_ij N_ij
// (so |A|^2 = 3 on SO(3)); dot_half = half of it, for which A.Lambda = 1/2 + cos(theta)
// when A differs from Lambda by a rotation of angle theta. All 1D theta-line
// formulas in this project use dot_half.

#include <Eigen/Dense>

#include "attitude/errors.hpp"

namespace attitude::so3 {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Orthogonality / determinant tolerance for the Rotation invariant.
inline constexpr double kRotationTol = 1e-10;

/// A 3x3 orthogonal matrix with det = 1 (validated on construction).
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  /// Validates ||R^T R - I||_inf <= 1e-10 and |det R - 1| <= 1e-10.
  explicit Rotation(const Mat3& m) : m_(m) {
    const double orth = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
    const double det = m.determinant();
    if (orth > kRotationTol || std::abs(det - 1.0) > kRotationTol) {
      throw NotARotation("matrix fails rotation invariants (orth " + std::to_string(orth) +
                         ", det " + std::to_string(det) + ")");
    }
  }

  struct Unchecked {};
  Rotation(const Mat3& m, Unchecked) : m_(m) {}

  const Mat3& matrix() const { return m_; }
  Vec3 col(int i) const { return m_.col(i); }

 private:
  Mat3 m_;
};

/// Stereographic coordinates of the three columns of a rotation.
struct StereoCoords {
  double phi[3];
  double theta[3];
  double W(int i) const { return 1.0 + phi[i] * phi[i] + theta[i] * theta[i]; }
};

/// [u]_x with [u]_x v = u x v.
Mat3 cross_matrix(const Vec3& u);

inline double dot_frobenius(const Mat3& m, const Mat3& n) { return m.cwiseProduct(n).sum(); }
inline double dot_half(const Mat3& m, const Mat3& n) { return 0.5 * dot_frobenius(m, n); }

/// Rodrigues formula, exact for all b.
Rotation exp_so3(const Vec3& b);

/// Inverse of exp_so3 on |b| < pi. Throws AngleAtPi when trace(R) <= -1 + 1e-12.
Vec3 log_so3(const Rotation& r);

/// P_{T_A}(M) = (M - A M^T A)/2, the orthogonal projection on the tangent
/// space at A. Complementary part is (M + A M^T A)/2.
Mat3 tangent_projection(const Rotation& a, const Mat3& m);
Mat3 normal_projection(const Rotation& a, const Mat3& m);

/// Polar factor M (sqrt(M^T M))^{-1} via symmetric eigendecomposition of M^T M.
/// Throws SingularFlux when det M <= 1e-12 or the smallest singular value <= 1e-12.
Rotation polar_decompose(const Mat3& m);

/// Inverse stereographic chart: (phi, theta) -> unit vector
/// (2 phi / W, 2 theta / W, (phi^2 + theta^2 - 1)/W), W = 1 + phi^2 + theta^2.
Vec3 stereo_to_vector(double phi, double theta);

/// Forward chart. Requires |n| = 1 (1e-10) and n3 < 1 - 1e-9 (chart excludes
/// the north pole); throws PoleSingularity otherwise.
void vector_to_stereo(const Vec3& n, double& phi, double& theta);

/// Chart partial derivatives, d(stereo_to_vector)/d(phi) and /d(theta).
void stereo_tangents(double phi, double theta, Vec3& d_phi, Vec3& d_theta);

/// Column-wise charts for a full frame. Throws PoleSingularity per column.
StereoCoords frame_to_stereo(const Rotation& lambda);

/// Reconstruct the three (unit-by-construction) columns from coordinates.
void stereo_to_frame(const StereoCoords& c, Vec3& omega, Vec3& u, Vec3& v);

}  // namespace attitude::so3
