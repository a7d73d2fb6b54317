#pragma once

#include <array>
#include <string>
#include <vector>

#include "icpattack/point_cloud.hpp"
#include "icpattack/se3.hpp"

namespace icpattack {

/// Which twist components the solver may update, [rho_x, rho_y, rho_z,
/// phi_x, phi_y, phi_z]. Masked components stay exactly zero.
using DofMask = std::array<bool, 6>;

inline constexpr DofMask kFullDof = {true, true, true, true, true, true};
inline constexpr DofMask kPlanarDof = {true, true, false, false, false, true};

struct IcpConfig {
  int max_iterations = 100;
  double tolerance = 1e-4;      ///< convergence: norm of the twist update
  double trim_distance = 5.0;   ///< correspondences farther than this are dropped
  double cauchy_k = 1.0;        ///< Cauchy M-estimator parameter
  DofMask dof_mask = kFullDof;
  Pose3d initial_guess = Pose3d::Identity();

  void validate() const;
};

/// Object-scale profile: unit-circle clouds, planar 3-DOF solve.
IcpConfig shapenet_icp_config();
/// Driving-scale profile: meters, full 6-DOF solve.
IcpConfig boreas_icp_config();
/// Profile lookup by name ("shapenet" | "boreas").
IcpConfig icp_config_profile(const std::string& name);

struct IcpResult {
  Pose3d estimate;
  int iterations = 0;
  bool converged = false;
  double final_cost = 0.0;
  Eigen::Index correspondence_count = 0;
};

/// One scan->map match: scan point index, map point index, and the
/// Euclidean distance at association time.
struct Correspondence {
  Eigen::Index scan_index;
  Eigen::Index map_index;
  double distance;
};

/// Nearest-map-point association of the scan under `current`, trimmed at
/// `trim_distance`. Throws AssociationEmptyError when nothing survives.
std::vector<Correspondence> associate(const PointCloud& scan, const SpatialIndex& map_index,
                                      const Pose3d& current, double trim_distance);

/// IRLS weight of the Cauchy M-estimator, 1 / (1 + (r/k)^2).
double cauchy_weight(double residual, double k);

/// Robust cost of one residual, (k^2/2) log(1 + (r/k)^2).
double cauchy_cost(double residual, double k);

/// Per-iteration record of the quantities a reverse pass needs: the pose
/// the step linearized at, the solved update, and the solve internals.
struct IcpStepTrace {
  Pose3d pose_before;
  Twist6d delta;
  std::vector<Correspondence> correspondences;
  std::vector<double> residuals;  ///< n^T (pose_before * p - q), per correspondence
  std::vector<double> weights;    ///< Cauchy IRLS weights of those residuals
  Eigen::MatrixXd a_free;         ///< free-DOF block of the normal matrix
};

/// One weighted point-to-plane Gauss-Newton step on the free DOFs.
/// Residuals are n^T (current*p - q); the update applies on the left:
/// updated = exp_se3(delta) * current. Throws DegenerateGeometryError when
/// the free block of the normal system has condition number > 1e12.
struct IcpStep {
  Pose3d updated;
  Twist6d delta;
};
IcpStep icp_step(const std::vector<Correspondence>& correspondences, const PointCloud& scan,
                 const PointCloud& map, const Pose3d& current, double cauchy_k,
                 const DofMask& dof_mask, IcpStepTrace* record = nullptr);

/// Full solve: associate / step until the update norm drops below
/// tolerance or max_iterations is hit. Map normals are estimated with
/// defaults when absent. Errors from inner stages are rethrown tagged
/// with the iteration index.
IcpResult run_icp(const PointCloud& scan, const PointCloud& map, const IcpConfig& config);

/// The loop behind run_icp, against a prebuilt index and normal-equipped
/// map. With `trace` non-null every iteration is recorded; both callers
/// share this path, so traced and plain solves match bit for bit.
IcpResult run_icp_traced(const PointCloud& scan, const PointCloud& map_with_normals,
                         const SpatialIndex& index, const IcpConfig& config,
                         std::vector<IcpStepTrace>* trace);

/// Free-DOF indices of a mask, in twist order.
std::vector<int> free_dof_indices(const DofMask& mask);

}  // namespace icpattack
