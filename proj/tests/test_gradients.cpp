#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "icpattack/icp_gradient.hpp"

using namespace icpattack;

namespace {

PointCloud square_boundary(double step) {
  std::vector<Eigen::Vector3d> pts;
  for (double s = -1.0; s < 1.0 - 1e-12; s += step) {
    pts.emplace_back(s, -1.0, 0.0);
    pts.emplace_back(1.0, s, 0.0);
    pts.emplace_back(-s, 1.0, 0.0);
    pts.emplace_back(-1.0, -s, 0.0);
  }
  PointCloud c;
  c.points.resize(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i)
    c.points.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return c;
}

PointCloud noisy_subsample(const PointCloud& map, Eigen::Index count, double sigma,
                           std::uint64_t seed) {
  REQUIRE(count <= map.size());
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(map.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::normal_distribution<double> g(0.0, sigma);
  PointCloud out;
  out.points.resize(count, 3);
  for (Eigen::Index i = 0; i < count; ++i) {
    out.points.row(i) = map.points.row(idx[static_cast<std::size_t>(i)]);
    out.points(i, 0) += g(rng);
    out.points(i, 1) += g(rng);
  }
  return out;
}

GradientConfig planar_config(int unroll) {
  GradientConfig cfg;
  cfg.unroll_iterations = unroll;
  cfg.icp.max_iterations = unroll;
  cfg.icp.tolerance = 1e-4;
  cfg.icp.trim_distance = 0.3;
  cfg.icp.cauchy_k = 0.15;
  cfg.icp.dof_mask = kPlanarDof;
  return cfg;
}

LossWeights planar_weights() {
  LossWeights w = LossWeights::Zero();
  w(0) = 1.0;
  w(1) = 1.0;
  return w;
}

}  // namespace

TEST_CASE("taped forward equals the plain K-iteration solve bit for bit") {
  const PointCloud map = estimate_normals(square_boundary(0.02));
  const PointCloud scan = noisy_subsample(map, 150, 0.02, 3);

  GradientConfig cfg = planar_config(7);
  const auto [taped, tape] = icp_forward_with_tape(scan, map, cfg);

  IcpConfig plain = cfg.icp;
  plain.max_iterations = cfg.unroll_iterations;
  const IcpResult reference = run_icp(scan, map, plain);

  CHECK(taped.estimate.rotation == reference.estimate.rotation);
  CHECK(taped.estimate.translation == reference.estimate.translation);
  CHECK(taped.iterations == reference.iterations);
  CHECK(taped.final_cost == reference.final_cost);
  CHECK(tape.steps.size() == static_cast<std::size_t>(taped.iterations));
}

TEST_CASE("aligned inputs tape a single zero-update iteration") {
  const PointCloud map = estimate_normals(square_boundary(0.05));
  const auto [result, tape] = icp_forward_with_tape(map, map, planar_config(10));
  CHECK(result.converged);
  CHECK(tape.steps.size() == 1);
  CHECK(tape.steps[0].delta.norm() < 1e-12);
}

TEST_CASE("zero loss weights give a zero gradient") {
  const PointCloud map = estimate_normals(square_boundary(0.05));
  const PointCloud scan = noisy_subsample(map, 60, 0.02, 5);
  const auto [result, tape] = icp_forward_with_tape(scan, map, planar_config(5));
  const PointMatrix grad = pose_error_gradient(tape, Pose3d::Identity(), LossWeights::Zero());
  CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single point against a plane reproduces the hand-derived slope") {
  // Map: plane x = 0 spread over y,z with exact normals (1,0,0).
  PointCloud map;
  std::vector<Eigen::Vector3d> pts;
  for (int i = -10; i <= 10; ++i)
    for (int j = -10; j <= 10; ++j) pts.emplace_back(0.0, 0.05 * i, 0.05 * j);
  map.points.resize(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i)
    map.points.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  map.normals = PointMatrix(map.size(), 3);
  map.normals->rowwise() = Eigen::RowVector3d(1.0, 0.0, 0.0);

  PointCloud scan;
  scan.points.resize(1, 3);
  scan.points << 0.1, 0.0, 0.0;

  GradientConfig cfg;
  cfg.unroll_iterations = 1;
  cfg.icp.max_iterations = 1;
  cfg.icp.trim_distance = 0.3;
  cfg.icp.cauchy_k = 0.15;
  cfg.icp.dof_mask = {true, false, false, false, false, false};

  LossWeights w = LossWeights::Zero();
  w(0) = 1.0;

  const auto [result, tape] = icp_forward_with_tape(scan, map, cfg);
  // One step lands the point on the plane: rho_x = -p_x.
  const PoseError3d err = pose_error(result.estimate, Pose3d::Identity());
  CHECK(err.rho(0) == doctest::Approx(-0.1).epsilon(1e-12));

  const PointMatrix grad = pose_error_gradient(tape, Pose3d::Identity(), w);
  CHECK(grad(0, 0) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(std::abs(grad(0, 1)) < 1e-12);
  CHECK(std::abs(grad(0, 2)) < 1e-12);

  // Mirrored point flips the sign of rho and of the slope.
  scan.points << -0.1, 0.0, 0.0;
  const auto [result2, tape2] = icp_forward_with_tape(scan, map, cfg);
  const PointMatrix grad2 = pose_error_gradient(tape2, Pose3d::Identity(), w);
  CHECK(grad2(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("finite differences confirm the analytic gradient on planar instances") {
  const PointCloud map = estimate_normals(square_boundary(0.1));
  const PointCloud scan = noisy_subsample(map, 20, 0.02, 11);

  GradientConfig cfg = planar_config(8);
  const GradientCheckReport report = finite_difference_check(
      scan, map, cfg, Pose3d::Identity(), planar_weights(), 60);

  CHECK(report.entries.size() + static_cast<std::size_t>(report.excluded) == 60);
  CHECK(report.pass_fraction >= 0.95);

  // Self-test of the harness: a negated gradient must fail everywhere the
  // finite difference is informative.
  int informative = 0;
  int failed_when_negated = 0;
  for (const auto& e : report.entries) {
    if (std::abs(e.finite_difference) < 1e-9) continue;
    ++informative;
    const double scale =
        std::max({std::abs(e.finite_difference), std::abs(e.analytic), 1e-12});
    if (std::abs(e.finite_difference + e.analytic) / scale > report.pass_threshold)
      ++failed_when_negated;
  }
  CHECK(informative > 0);
  CHECK(failed_when_negated == informative);
}

TEST_CASE("finite_difference_check with zero weights passes everywhere") {
  const PointCloud map = estimate_normals(square_boundary(0.1));
  const PointCloud scan = noisy_subsample(map, 15, 0.02, 13);
  const GradientCheckReport report = finite_difference_check(
      scan, map, planar_config(5), Pose3d::Identity(), LossWeights::Zero(), 20);
  CHECK(report.pass_fraction == 1.0);
  CHECK(report.excluded == 0);
}

TEST_CASE("gradient rotates covariantly with a rigid z-rotation of the instance") {
  const PointCloud map = estimate_normals(square_boundary(0.05));
  const PointCloud scan = noisy_subsample(map, 80, 0.02, 17);
  GradientConfig cfg = planar_config(6);
  LossWeights w = LossWeights::Ones();

  const Pose3d t_gt = Pose3d::Identity();
  const auto [res_a, tape_a] = icp_forward_with_tape(scan, map, cfg);
  const PointMatrix grad_a = pose_error_gradient(tape_a, t_gt, w);

  Twist6d s_xi = Twist6d::Zero();
  s_xi(5) = 0.7;  // rotation about z keeps the planar mask meaningful
  const Pose3d s = exp_se3(s_xi);
  const auto [res_b, tape_b] =
      icp_forward_with_tape(transform_cloud(scan, s), transform_cloud(map, s), cfg);
  const PointMatrix grad_b = pose_error_gradient(tape_b, s * t_gt * inverse(s), w);

  const PointMatrix expected = grad_a * s.rotation.transpose();
  CHECK((grad_b - expected).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("gradient is 1-homogeneous in the loss weights") {
  const PointCloud map = estimate_normals(square_boundary(0.05));
  const PointCloud scan = noisy_subsample(map, 60, 0.02, 19);
  const auto [result, tape] = icp_forward_with_tape(scan, map, planar_config(6));

  const LossWeights w = planar_weights();
  const PointMatrix g1 = pose_error_gradient(tape, Pose3d::Identity(), w);
  const PointMatrix g2 = pose_error_gradient(tape, Pose3d::Identity(), LossWeights(2.0 * w));
  CHECK((g2 - 2.0 * g1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("normal-direction gradient components dominate tangential ones") {
  const PointCloud map = estimate_normals(square_boundary(0.02));
  const PointCloud scan = noisy_subsample(map, 200, 1e-3, 23);
  const auto [result, tape] = icp_forward_with_tape(scan, map, planar_config(10));
  const PointMatrix grad = pose_error_gradient(tape, Pose3d::Identity(), planar_weights());
  CHECK(grad.allFinite());

  const SpatialIndex index = build_index(map);
  double normal_mass = 0.0;
  double tangential_mass = 0.0;
  for (Eigen::Index i = 0; i < scan.size(); ++i) {
    const auto nb = index.nearest(scan.points.row(i).transpose());
    const Eigen::Vector3d n = map.normals->row(nb.index).transpose();
    const Eigen::Vector3d t = n.cross(Eigen::Vector3d::UnitZ());
    normal_mass += std::abs(grad.row(i).dot(n.transpose()));
    tangential_mass += std::abs(grad.row(i).dot(t.transpose()));
  }
  CHECK(normal_mass > tangential_mass);
}

TEST_CASE("exactly aligned clouds yield a finite (zero) gradient") {
  const PointCloud map = estimate_normals(square_boundary(0.05));
  const auto [result, tape] = icp_forward_with_tape(map, map, planar_config(5));
  const PointMatrix grad = pose_error_gradient(tape, Pose3d::Identity(), planar_weights());
  CHECK(grad.allFinite());
  CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
}
