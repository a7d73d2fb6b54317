#include "icpattack/point_cloud.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "icpattack/errors.hpp"

namespace icpattack {

SpatialIndex build_index(const PointCloud& cloud) {
  if (cloud.size() == 0) throw ValidationError("build_index: empty cloud");
  return KdTree(cloud.points);
}

PointCloud transform_cloud(const PointCloud& cloud, const Pose3d& pose) {
  PointCloud out;
  out.points = (cloud.points * pose.rotation.transpose()).rowwise() + pose.translation.transpose();
  if (cloud.normals) out.normals = *cloud.normals * pose.rotation.transpose();
  return out;
}

Eigen::Vector3d unify_normal_sign(const Eigen::Vector3d& n) {
  if (n.x() != 0.0) return n.x() > 0.0 ? n : Eigen::Vector3d(-n);
  if (n.y() != 0.0) return n.y() > 0.0 ? n : Eigen::Vector3d(-n);
  return n.z() >= 0.0 ? n : Eigen::Vector3d(-n);
}

namespace {

// PCA normal of one neighborhood. Surface-like neighborhoods take the
// smallest-eigenvalue eigenvector. Strongly anisotropic neighborhoods are
// boundary curves of a 2D cloud: their normal is the x-y perpendicular of
// the tangent, since the smallest eigenvector of flat z=0 data always
// degenerates to the z axis. Collinear neighborhoods (rank < 2) keep that
// curve normal but are flagged; when even the tangent is vertical the
// normal falls back to +z.
Eigen::Vector3d neighborhood_normal(const Eigen::Matrix3d& cov, bool* flagged) {
  constexpr double kRankTol = 1e-9;
  constexpr double kCurveRatio = 1e-2;
  *flagged = false;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Eigen::Vector3d evals = eig.eigenvalues();  // ascending
  if (evals(2) <= 0.0) {
    *flagged = true;
    return {0.0, 0.0, 1.0};
  }

  const Eigen::Vector3d tangent = eig.eigenvectors().col(2);
  const bool collinear = evals(1) <= kRankTol * evals(2);
  if (collinear || evals(1) <= kCurveRatio * evals(2)) {
    *flagged = collinear;
    const Eigen::Vector3d planar = tangent.cross(Eigen::Vector3d::UnitZ());
    if (planar.norm() <= kRankTol) {
      *flagged = true;
      return {0.0, 0.0, 1.0};
    }
    return unify_normal_sign(planar.normalized());
  }
  return unify_normal_sign(eig.eigenvectors().col(0));
}

}  // namespace

PointCloud estimate_normals(const PointCloud& cloud, int k,
                            std::vector<Eigen::Index>* degenerate) {
  if (k < 3) throw ValidationError("estimate_normals: k must be >= 3");
  if (cloud.size() < k) throw ValidationError("estimate_normals: cloud smaller than k");
  const KdTree index(cloud.points);

  PointCloud out = cloud;
  out.normals = PointMatrix(cloud.size(), 3);
  if (degenerate) degenerate->clear();

  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const auto neighbors = index.knn(cloud.points.row(i).transpose(), k);
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& nb : neighbors) centroid += cloud.points.row(nb.index).transpose();
    centroid /= static_cast<double>(neighbors.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& nb : neighbors) {
      const Eigen::Vector3d d = cloud.points.row(nb.index).transpose() - centroid;
      cov += d * d.transpose();
    }

    bool flagged = false;
    out.normals->row(i) = neighborhood_normal(cov, &flagged).transpose();
    if (flagged && degenerate) degenerate->push_back(i);
  }
  return out;
}

std::vector<Eigen::Index> farthest_point_sampling(const PointCloud& cloud, Eigen::Index m,
                                                  std::uint64_t seed) {
  const Eigen::Index n = cloud.size();
  if (m < 1 || m > n) throw ValidationError("farthest_point_sampling: need 1 <= m <= N");

  std::vector<Eigen::Index> picked;
  picked.reserve(static_cast<std::size_t>(m));
  picked.push_back(static_cast<Eigen::Index>(seed % static_cast<std::uint64_t>(n)));

  Eigen::VectorXd min_d2 =
      (cloud.points.rowwise() - cloud.points.row(picked[0])).rowwise().squaredNorm();
  for (Eigen::Index s = 1; s < m; ++s) {
    Eigen::Index next = 0;
    min_d2.maxCoeff(&next);
    picked.push_back(next);
    min_d2 = min_d2.cwiseMin(
        (cloud.points.rowwise() - cloud.points.row(next)).rowwise().squaredNorm());
  }
  return picked;
}

PointMatrix interpolate_vectors(const PointCloud& source_points, const PointMatrix& source_values,
                                const PointCloud& targets, int k) {
  if (source_points.size() == 0) throw ValidationError("interpolate_vectors: empty source");
  if (source_values.rows() != source_points.size())
    throw ValidationError("interpolate_vectors: values/points size mismatch");
  if (k < 1) throw ValidationError("interpolate_vectors: k must be >= 1");

  constexpr double kDistFloor = 1e-8;
  const KdTree index(source_points.points);
  PointMatrix out(targets.size(), 3);
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    const auto neighbors = index.knn(targets.points.row(i).transpose(), k);
    double wsum = 0.0;
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (const auto& nb : neighbors) {
      const double w = 1.0 / std::max(nb.distance, kDistFloor);
      wsum += w;
      acc += w * source_values.row(nb.index).transpose();
    }
    out.row(i) = (acc / wsum).transpose();
  }
  return out;
}

PointCloud normalize_to_unit(const PointCloud& cloud) {
  if (cloud.size() == 0) throw ValidationError("normalize_to_unit: empty cloud");
  const Eigen::RowVector3d centroid = cloud.points.colwise().mean();
  PointCloud out = cloud;
  out.points = cloud.points.rowwise() - centroid;
  const double radius = out.points.rowwise().norm().maxCoeff();
  if (radius <= 0.0) throw ValidationError("normalize_to_unit: zero scale (all points identical)");
  out.points /= radius;
  return out;
}

PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw ValidationError("add_gaussian_noise: sigma must be >= 0");
  if (sigma == 0.0) return cloud;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  PointCloud out = cloud;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    for (int c = 0; c < 3; ++c) out.points(i, c) += gauss(rng);
  return out;
}

}  // namespace icpattack
