#include <doctest.h>

#include <random>

#include "attitude/numerics.hpp"
#include "attitude/so3_core.hpp"
#include "oracles.hpp"

using namespace attitude;
using so3::Mat3;
using so3::Rotation;
using so3::Vec3;

TEST_CASE("cross_matrix matches the displayed layout and the cross product") {
  const Mat3 m = so3::cross_matrix(Vec3(1, 0, 0));
  Mat3 expect;
  expect << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  CHECK((m - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK(so3::cross_matrix(Vec3::Zero()).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    const Vec3 u(nd(gen), nd(gen), nd(gen)), v(nd(gen), nd(gen), nd(gen));
    CHECK((so3::cross_matrix(u) * v - oracles::cross_product(u, v)).norm() < 1e-14);
  }
}

TEST_CASE("inner products") {
  std::mt19937_64 gen(2);
  const Rotation a = num::random_rotation(gen);
  CHECK(so3::dot_frobenius(a.matrix(), a.matrix()) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(so3::dot_frobenius(Mat3::Identity(), Mat3::Identity()) == doctest::Approx(3.0));
  // half-trace of an axis-angle rotation against the identity: 1/2 + cos(theta)
  for (double theta : {0.3, 1.2, 2.6}) {
    const Rotation r = so3::exp_so3(theta * Vec3(0.3, -0.5, 0.8).normalized());
    CHECK(so3::dot_half(r.matrix(), Mat3::Identity()) ==
          doctest::Approx(0.5 + std::cos(theta)).epsilon(1e-12));
  }
}

TEST_CASE("exp_so3 against the series oracle; log round trip") {
  CHECK((so3::exp_so3(Vec3::Zero()).matrix() - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);

  Mat3 quarter_turn;
  quarter_turn << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((so3::exp_so3(Vec3(0, 0, M_PI / 2)).matrix() - quarter_turn).cwiseAbs().maxCoeff() <
        1e-15);

  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 40; ++t) {
    Vec3 b(nd(gen), nd(gen), nd(gen));
    b *= 3.0 / std::max(3.0, b.norm() / 0.999);  // |b| < 3
    const Mat3 r = so3::exp_so3(b).matrix();
    CHECK((r - oracles::expm_series(so3::cross_matrix(b))).cwiseAbs().maxCoeff() < 1e-13);
    const Vec3 back = so3::log_so3(so3::exp_so3(b));
    CHECK((back - b).norm() < 1e-10);
  }
  // tiny angles go through the series branch
  const Vec3 small(1e-7, -2e-7, 5e-8);
  CHECK((so3::log_so3(so3::exp_so3(small)) - small).norm() < 1e-18);
}

TEST_CASE("log_so3 rejects angle pi") {
  Mat3 half_turn;
  half_turn << 1, 0, 0, 0, -1, 0, 0, 0, -1;  // rotation by pi about x
  CHECK_THROWS_AS(so3::log_so3(Rotation(half_turn)), AngleAtPi);
}

TEST_CASE("tangent projection: fixed points, idempotence, complementarity, gradient oracle") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  const Rotation id;
  Mat3 sym, anti;
  sym << 1, 2, 3, 2, 5, -1, 3, -1, 0;
  anti << 0, 2, -3, -2, 0, 1, 3, -1, 0;
  CHECK(so3::tangent_projection(id, sym).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((so3::tangent_projection(id, anti) - anti).cwiseAbs().maxCoeff() < 1e-15);

  for (int t = 0; t < 20; ++t) {
    const Rotation a = num::random_rotation(gen);
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = nd(gen);
    const Mat3 p = so3::tangent_projection(a, m);
    // tangency: A^T P antisymmetric
    const Mat3 atp = a.matrix().transpose() * p;
    CHECK((atp + atp.transpose()).cwiseAbs().maxCoeff() < 1e-13);
    // idempotence and complementarity
    CHECK((so3::tangent_projection(a, p) - p).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((p + so3::normal_projection(a, m) - m).cwiseAbs().maxCoeff() < 1e-13);
    // directional-derivative oracle: d/dt dot_half(A exp(t[e_i]x), M)
    const double h = 1e-6;
    Mat3 grad_mat = Mat3::Zero();
    for (int i = 0; i < 3; ++i) {
      Vec3 e = Vec3::Zero();
      e(i) = 1.0;
      const double fp = so3::dot_half(a.matrix() * so3::exp_so3(h * e).matrix(), m);
      const double fm = so3::dot_half(a.matrix() * so3::exp_so3(-h * e).matrix(), m);
      grad_mat += (fp - fm) / (2.0 * h) * a.matrix() * so3::cross_matrix(e);
    }
    CHECK((grad_mat - p).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("polar decomposition") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  // rotations are fixed points
  const Rotation r0 = num::random_rotation(gen);
  CHECK((so3::polar_decompose(r0.matrix()).matrix() - r0.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  // positive diagonal maps to the identity
  CHECK((so3::polar_decompose(Vec3(2, 3, 4).asDiagonal().toDenseMatrix()).matrix() -
         Mat3::Identity())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  int tested = 0;
  for (int t = 0; t < 40; ++t) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = nd(gen);
    Eigen::JacobiSVD<Mat3> svd(m);
    if (m.determinant() < 1e-3 || svd.singularValues().minCoeff() < 1e-3) continue;
    ++tested;
    const Mat3 pd = so3::polar_decompose(m).matrix();
    CHECK((pd - oracles::svd_polar(m)).cwiseAbs().maxCoeff() < 1e-10);
    // scale invariance
    CHECK((so3::polar_decompose(2.5 * m).matrix() - pd).cwiseAbs().maxCoeff() < 1e-11);
  }
  CHECK(tested >= 10);
  CHECK_THROWS_AS(so3::polar_decompose(Mat3::Zero()), SingularFlux);
  Mat3 reflect = Vec3(1, 1, -1).asDiagonal();
  CHECK_THROWS_AS(so3::polar_decompose(reflect), SingularFlux);  // det < 0
}

TEST_CASE("stereographic chart") {
  CHECK((so3::stereo_to_vector(0, 0) - Vec3(0, 0, -1)).norm() < 1e-15);
  CHECK((so3::stereo_to_vector(1, 0) - Vec3(1, 0, 0)).norm() < 1e-15);

  std::mt19937_64 gen(6);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    Vec3 n(nd(gen), nd(gen), nd(gen));
    n.normalize();
    if (n.z() >= 0.9) n.z() = -n.z();
    double phi, theta;
    so3::vector_to_stereo(n, phi, theta);
    CHECK((so3::stereo_to_vector(phi, theta) - n).norm() < 1e-12);
    CHECK(std::abs(so3::stereo_to_vector(phi, theta).norm() - 1.0) < 1e-14);
  }
  double phi, theta;
  CHECK_THROWS_AS(so3::vector_to_stereo(Vec3(0, 0, 1), phi, theta), PoleSingularity);

  // chart tangent vectors are the phi/theta partials
  const double h = 1e-7;
  for (auto [p0, t0] : {std::pair{0.4, -0.7}, std::pair{-1.2, 0.3}}) {
    Vec3 dp, dt;
    so3::stereo_tangents(p0, t0, dp, dt);
    CHECK((dp - (so3::stereo_to_vector(p0 + h, t0) - so3::stereo_to_vector(p0 - h, t0)) /
                    (2.0 * h))
              .norm() < 1e-6);
    CHECK((dt - (so3::stereo_to_vector(p0, t0 + h) - so3::stereo_to_vector(p0, t0 - h)) /
                    (2.0 * h))
              .norm() < 1e-6);
  }
}

TEST_CASE("frame chart round trip and pole rejection") {
  std::mt19937_64 gen(7);
  int accepted = 0;
  for (int t = 0; t < 60; ++t) {
    const Rotation lam = num::random_rotation(gen);
    bool safe = true;
    for (int c = 0; c < 3; ++c) safe = safe && lam.matrix()(2, c) < 0.9;
    if (!safe) continue;
    ++accepted;
    const so3::StereoCoords sc = so3::frame_to_stereo(lam);
    Vec3 om, uu, vv;
    so3::stereo_to_frame(sc, om, uu, vv);
    CHECK((om - lam.col(0)).norm() < 1e-12);
    CHECK((uu - lam.col(1)).norm() < 1e-12);
    CHECK((vv - lam.col(2)).norm() < 1e-12);
    CHECK(std::abs(om.dot(uu)) < 1e-10);
    CHECK(std::abs(uu.dot(vv)) < 1e-10);
    CHECK(std::abs(vv.dot(om)) < 1e-10);
  }
  CHECK(accepted >= 20);
  CHECK_THROWS_AS(so3::frame_to_stereo(Rotation()), PoleSingularity);  // identity: e3 column at pole
}

TEST_CASE("Rotation invariants enforced") {
  Mat3 bad = Mat3::Identity();
  bad(0, 1) = 1e-6;
  CHECK_THROWS_AS(Rotation{bad}, NotARotation);
}
