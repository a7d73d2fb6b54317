#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

#include "icpattack/point_cloud.hpp"
#include "icpattack/se3.hpp"

namespace icpattack {

/// One scan-to-map localization problem: the scan lives in its own frame
/// and ground_truth (T_QP) maps scan frame to map frame.
struct LocalizationPair {
  std::string id;
  PointCloud scan;
  PointCloud map;  ///< carries normals once loaded/generated
  Pose3d ground_truth;
  std::optional<Eigen::Vector2d> location;  ///< route coordinates, meters
};

}  // namespace icpattack
