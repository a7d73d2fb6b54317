#pragma once

#include <utility>
#include <vector>

#include "icpattack/icp.hpp"
#include "icpattack/losses.hpp"
#include "icpattack/point_cloud.hpp"

namespace icpattack {

struct GradientConfig {
  int unroll_iterations = 25;  ///< K; the taped solve runs at most this many
  IcpConfig icp;
  double fd_epsilon = 1e-5;  ///< step of the finite-difference checker
  /// Backpropagate through the Cauchy weights' dependence on the
  /// residuals. Off, the weights of the forward pass act as constants.
  bool differentiate_weights = true;

  void validate() const;
};

/// Everything the reverse pass consumes: the clouds, the config the
/// forward ran with, and each iteration's solve record.
struct Tape {
  PointCloud scan;
  PointCloud map;  ///< with normals
  IcpConfig icp;   ///< as executed (max_iterations capped at K)
  bool differentiate_weights = true;
  std::vector<IcpStepTrace> steps;
  Pose3d final_pose;
};

/// Forward ICP capped at K iterations, recording the tape. The estimate
/// is bit-identical to run_icp under the same capped config.
std::pair<IcpResult, Tape> icp_forward_with_tape(const PointCloud& scan, const PointCloud& map,
                                                 const GradientConfig& config);

/// d L_adv / d scan points (N x 3), by reverse accumulation through the
/// taped iterations. Data association and trim decisions are constants of
/// the forward pass; each linear solve is differentiated implicitly
/// against its recorded normal matrix.
PointMatrix pose_error_gradient(const Tape& tape, const Pose3d& t_gt, const LossWeights& w,
                                AdvLossForm form = AdvLossForm::elementwise);

struct GradientCheckEntry {
  Eigen::Index point;
  int axis;
  double analytic;
  double finite_difference;
  double relative_error;
};

struct GradientCheckReport {
  std::vector<GradientCheckEntry> entries;
  int excluded = 0;  ///< probes whose +/- runs saw different associations
  double pass_threshold = 1e-3;
  double pass_fraction = 0.0;  ///< share of kept probes under the threshold
};

/// Central-difference probe of pose_error_gradient on `sample_coordinates`
/// coordinates, spread evenly over the scan. Probes that cross an
/// association boundary between the two evaluations are excluded and
/// counted.
GradientCheckReport finite_difference_check(const PointCloud& scan, const PointCloud& map,
                                            const GradientConfig& config, const Pose3d& t_gt,
                                            const LossWeights& w, int sample_coordinates,
                                            AdvLossForm form = AdvLossForm::elementwise,
                                            double pass_threshold = 1e-3);

}  // namespace icpattack
