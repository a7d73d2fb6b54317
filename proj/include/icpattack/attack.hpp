#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "icpattack/icp_gradient.hpp"
#include "icpattack/localization_pair.hpp"
#include "icpattack/losses.hpp"

namespace icpattack {

struct AttackConfig {
  double lambda = 0.1;  ///< per-point displacement budget (soft, via L_rec)
  double alpha = 1.0;
  double beta = 10.0;
  LossWeights w = (LossWeights() << 1, 1, 0, 0, 0, 0).finished();
  int steps = 50;
  /// Largest per-point move per descent step, in cloud units (the total
  /// gradient is normalized by its biggest per-point norm before the
  /// momentum update). Defaults to 0.05 * lambda when unset.
  std::optional<double> step_size;
  double momentum = 0.9;
  GradientConfig unroll;
  std::uint64_t seed = 0;
  AdvLossForm loss_form = AdvLossForm::elementwise;

  double resolved_step_size() const { return step_size ? *step_size : 0.05 * lambda; }
  void validate() const;
};

/// Quantile levels at which displacement overshoots are summarized.
inline constexpr std::array<double, 5> kOvershootQuantileProbs = {0.5, 0.9, 0.99, 0.997, 1.0};

struct PerturbationResult {
  PointCloud adversarial;    ///< X_adv, points only
  PointMatrix displacements; ///< X_adv - X, per point
  double lambda = 0.0;       ///< bound the perturbation was produced under
  std::optional<PoseError3d> pose_error_before;  ///< full-solver eval; attack only
  std::optional<PoseError3d> pose_error_after;
  /// Quantiles of max(|d_i| - lambda, 0) over points that overshoot, at
  /// kOvershootQuantileProbs; zeros when nothing overshoots.
  std::array<double, 5> overshoot_quantiles = {};
  std::vector<double> loss_trace;  ///< total loss per evaluated iterate
  bool warning = false;            ///< aborted after three consecutive ICP failures
};

/// Worst-case perturbation by momentum gradient descent on the total loss
/// through the unrolled solver. Starts at X_adv = X, keeps the best
/// iterate by loss. Throws IcpNotConvergedError when the unperturbed scan
/// does not converge under the full evaluation solver.
PerturbationResult optimize_perturbation(const LocalizationPair& pair,
                                         const AttackConfig& config);

/// Rigid whole-scan shift by lambda at a seed-chosen angle in the x-y plane.
PerturbationResult baseline_uniform(const PointCloud& scan, double lambda, std::uint64_t seed);

/// Per-point shift by lambda along the sign-unified, x-y-projected normal.
/// Points whose normal projects to (numerically) nothing stay put. Scan
/// normals are estimated when absent.
PerturbationResult baseline_normal(const PointCloud& scan, double lambda);

}  // namespace icpattack
