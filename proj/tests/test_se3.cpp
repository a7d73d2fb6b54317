#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "icpattack/se3.hpp"

using namespace icpattack;

namespace {

Twist6d random_twist(std::mt19937_64& rng, double trans_scale, double max_angle) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Twist6d xi;
  for (int i = 0; i < 3; ++i) xi(i) = trans_scale * u(rng);
  Eigen::Vector3d axis(u(rng), u(rng), u(rng));
  while (axis.norm() < 1e-6) axis = Eigen::Vector3d(u(rng), u(rng), u(rng));
  axis.normalize();
  std::uniform_real_distribution<double> a(0.0, max_angle);
  xi.tail<3>() = a(rng) * axis;
  return xi;
}

Pose3d random_pose(std::mt19937_64& rng) { return exp_se3(random_twist(rng, 1.0, 2.5)); }

// Truncated matrix-exponential of the 4x4 twist matrix; independent of the
// closed-form implementation under test.
Eigen::Matrix4d exp_series(const Twist6d& xi, int terms) {
  Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
  a.block<3, 3>(0, 0) = hat(Eigen::Vector3d(xi.tail<3>()));
  a.block<3, 1>(0, 3) = xi.head<3>();
  Eigen::Matrix4d sum = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d term = Eigen::Matrix4d::Identity();
  for (int k = 1; k <= terms; ++k) {
    term = (term * a) / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

}  // namespace

TEST_CASE("exp_se3 zero twist gives identity") {
  const Pose3d p = exp_se3(Twist6d::Zero());
  CHECK((p.rotation - Eigen::Matrix3d::Identity()).norm() == 0.0);
  CHECK(p.translation.norm() == 0.0);
}

TEST_CASE("exp_se3 pure translation") {
  Twist6d xi = Twist6d::Zero();
  xi(0) = 0.5;
  const Pose3d p = exp_se3(xi);
  CHECK(p.translation.isApprox(Eigen::Vector3d(0.5, 0.0, 0.0)));
  CHECK(p.rotation.isApprox(Eigen::Matrix3d::Identity()));
}

TEST_CASE("exp_se3 matches 12-term matrix-exponential series") {
  Twist6d xi;
  xi << 0.1, -0.2, 0.05, 0.01, 0.02, -0.03;
  const Pose3d p = exp_se3(xi);
  const Eigen::Matrix4d expected = exp_series(xi, 12);
  CHECK((to_matrix(p) - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pose invariants: orthonormality and inverse composition") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const Pose3d p = random_pose(rng);
    CHECK((p.rotation.transpose() * p.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-9);
    CHECK(p.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    const Pose3d id = compose(p, inverse(p));
    CHECK((to_matrix(id) - Eigen::Matrix4d::Identity()).norm() < 1e-9);
  }
}

TEST_CASE("log_se3 of identity is zero") {
  CHECK(log_se3(Pose3d::Identity()).norm() == 0.0);
}

TEST_CASE("log_se3 inverts exp_se3 (1000 random twists, angle < 3)") {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Twist6d xi = random_twist(rng, 2.0, 3.0);
    const Twist6d back = log_se3(exp_se3(xi));
    worst = std::max(worst, (back - xi).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("log_se3 quarter turn about z matches numeric matrix logarithm") {
  Twist6d xi = Twist6d::Zero();
  xi(5) = EIGEN_PI / 2.0;
  const Pose3d p = exp_se3(xi);
  const Twist6d back = log_se3(p);
  CHECK(back.tail<3>().isApprox(Eigen::Vector3d(0.0, 0.0, EIGEN_PI / 2.0), 1e-12));
  CHECK(back.head<3>().norm() < 1e-12);

  const Eigen::Matrix3d phi_hat = p.rotation.log();
  CHECK((hat(Eigen::Vector3d(back.tail<3>())) - phi_hat).norm() < 1e-9);
}

TEST_CASE("log_se3 handles rotation angle pi") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    Eigen::Vector3d axis(u(rng), u(rng), u(rng));
    axis.normalize();
    Pose3d p;
    p.rotation = Eigen::AngleAxisd(EIGEN_PI, axis).toRotationMatrix();
    p.translation = Eigen::Vector3d(u(rng), u(rng), u(rng));
    const Twist6d xi = log_se3(p);
    CHECK(xi.tail<3>().norm() == doctest::Approx(EIGEN_PI).epsilon(1e-9));
    const Pose3d back = exp_se3(xi);
    CHECK((back.rotation - p.rotation).norm() < 1e-8);
    CHECK((back.translation - p.translation).norm() < 1e-8);
  }
}

TEST_CASE("pose_error of a pose with itself is zero") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const Pose3d t = random_pose(rng);
    const PoseError3d e = pose_error(t, t);
    CHECK(e.rho.norm() < 1e-12);
    CHECK(e.phi.norm() < 1e-12);
  }
}

TEST_CASE("pose_error with identity ground truth and pure translation") {
  Pose3d t_hat;
  t_hat.translation = Eigen::Vector3d(0.5, 0.0, 0.0);
  const PoseError3d e = pose_error(t_hat, Pose3d::Identity());
  CHECK(e.rho.isApprox(Eigen::Vector3d(0.5, 0.0, 0.0)));
  CHECK(e.phi.norm() == 0.0);
}

TEST_CASE("pose_error recovers the twist that separates a random pair") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const Pose3d t_gt = random_pose(rng);
    const Twist6d xi = random_twist(rng, 1.0, 2.8);
    const Pose3d t_hat = exp_se3(xi) * t_gt;
    const PoseError3d e = pose_error(t_hat, t_gt);
    CHECK((to_twist(e) - xi).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("pose_error is right-invariant") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    const Pose3d t_hat = random_pose(rng);
    const Pose3d t_gt = random_pose(rng);
    const Pose3d s = random_pose(rng);
    const PoseError3d a = pose_error(t_hat, t_gt);
    const PoseError3d b = pose_error(t_hat * s, t_gt * s);
    CHECK((a.rho - b.rho).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((a.phi - b.phi).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("pose_error vanishes only for equal poses") {
  std::mt19937_64 rng(19);
  const Pose3d t = random_pose(rng);
  Twist6d xi = Twist6d::Zero();
  xi(1) = 1e-3;
  const PoseError3d e = pose_error(exp_se3(xi) * t, t);
  CHECK(to_twist(e).norm() > 1e-4);
}

TEST_CASE("left jacobians match finite differences of exp") {
  std::mt19937_64 rng(23);
  const double h = 1e-7;
  for (int trial = 0; trial < 20; ++trial) {
    const Twist6d xi = random_twist(rng, 1.5, 2.9);
    const Mat6<double> jac = left_jacobian_se3(xi);
    const Pose3d t_inv = inverse(exp_se3(xi));
    for (int c = 0; c < 6; ++c) {
      Twist6d bumped = xi;
      bumped(c) += h;
      const Twist6d fd = log_se3(exp_se3(bumped) * t_inv) / h;
      CHECK((fd - jac.col(c)).cwiseAbs().maxCoeff() < 1e-5);
    }
    const Mat6<double> prod = jac * inv_left_jacobian_se3(xi);
    CHECK((prod - Mat6<double>::Identity()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("se3 jacobian series and closed form agree near the branch point") {
  for (double theta : {0.09, 0.0999, 0.1001, 0.11}) {
    Twist6d xi;
    xi << 0.3, -0.2, 0.1, 0.0, 0.0, 0.0;
    xi.tail<3>() = theta * Eigen::Vector3d(1.0, 2.0, -2.0).normalized();
    const Mat6<double> prod = left_jacobian_se3(xi) * inv_left_jacobian_se3(xi);
    CHECK((prod - Mat6<double>::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("sample_random_pose: zero-width ranges give identity") {
  const AxisIntervals zero = {Interval{0, 0}, Interval{0, 0}, Interval{0, 0}};
  const Pose3d p = sample_random_pose(zero, zero, 42);
  CHECK((to_matrix(p) - Eigen::Matrix4d::Identity()).norm() == 0.0);
}

TEST_CASE("sample_random_pose respects ranges and is deterministic") {
  const AxisIntervals trans = {Interval{-0.08, 0.08}, Interval{-0.08, 0.08}, Interval{0, 0}};
  const AxisIntervals rot = {Interval{0, 0}, Interval{0, 0}, Interval{-10, 10}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Pose3d p = sample_random_pose(trans, rot, seed);
    CHECK(std::abs(p.translation.x()) <= 0.08);
    CHECK(std::abs(p.translation.y()) <= 0.08);
    CHECK(p.translation.z() == 0.0);
    const Twist6d xi = log_se3(p);
    CHECK(std::abs(xi(5)) <= 10.0 * EIGEN_PI / 180.0 + 1e-12);
    CHECK(std::abs(xi(3)) < 1e-12);
    CHECK(std::abs(xi(4)) < 1e-12);
  }
  const Pose3d a = sample_random_pose(trans, rot, 7);
  const Pose3d b = sample_random_pose(trans, rot, 7);
  CHECK(a.rotation == b.rotation);
  CHECK(a.translation == b.translation);
}

TEST_CASE("sample_random_pose rejects empty intervals") {
  AxisIntervals bad = {Interval{0.1, -0.1}, Interval{0, 0}, Interval{0, 0}};
  const AxisIntervals ok = {Interval{0, 0}, Interval{0, 0}, Interval{0, 0}};
  CHECK_THROWS_AS(sample_random_pose(bad, ok, 1), ValidationError);
  CHECK_THROWS_AS(sample_random_pose(ok, bad, 1), ValidationError);
}
