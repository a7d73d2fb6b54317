#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "icpattack/kdtree.hpp"
#include "icpattack/se3.hpp"

namespace icpattack {

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Points with optional unit normals. Immutable by convention after
/// construction; all operations below return new clouds.
struct PointCloud {
  PointMatrix points;
  std::optional<PointMatrix> normals;

  Eigen::Index size() const { return points.rows(); }
  bool has_normals() const { return normals.has_value(); }
};

using SpatialIndex = KdTree;

/// Exact nearest-neighbor index over the cloud's points.
SpatialIndex build_index(const PointCloud& cloud);

/// Applies T to points (R p + t) and rotates normals when present.
PointCloud transform_cloud(const PointCloud& cloud, const Pose3d& pose);

/// Resolves the two-fold normal ambiguity: flip so the x-component is
/// positive; if it is zero, so the y-component is positive; if both are
/// zero, so the z-component is positive.
Eigen::Vector3d unify_normal_sign(const Eigen::Vector3d& n);

/// PCA normals from the k nearest neighbors of each point (self included),
/// sign-unified. Surface neighborhoods take the smallest-eigenvalue
/// eigenvector; boundary-curve neighborhoods of flat 2D clouds take the
/// x-y perpendicular of their tangent. Rank < 2 neighborhoods are flagged
/// into `degenerate` when provided (normal +z when no tangent direction
/// is usable either).
PointCloud estimate_normals(const PointCloud& cloud, int k = 10,
                            std::vector<Eigen::Index>* degenerate = nullptr);

/// Greedy farthest-point subsampling. The seed selects the first index
/// (seed mod N); every later pick maximizes the minimum distance to the
/// selected set, lowest index on ties.
std::vector<Eigen::Index> farthest_point_sampling(const PointCloud& cloud, Eigen::Index m,
                                                  std::uint64_t seed);

/// Inverse-distance interpolation of per-point vectors onto target points:
/// weights 1/max(d, 1e-8) over the k nearest sources, normalized to sum 1.
PointMatrix interpolate_vectors(const PointCloud& source_points, const PointMatrix& source_values,
                                const PointCloud& targets, int k = 3);

/// Shifts the centroid to the origin and scales so the farthest point sits
/// at radius 1.
PointCloud normalize_to_unit(const PointCloud& cloud);

/// Adds i.i.d. zero-mean Gaussian noise to every coordinate. sigma = 0
/// returns the cloud unchanged, bit for bit.
PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed);

}  // namespace icpattack
