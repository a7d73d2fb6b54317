#include "icpattack/attack.hpp"

#include <cmath>
#include <random>

#include "icpattack/errors.hpp"
#include "icpattack/stats.hpp"

namespace icpattack {

void AttackConfig::validate() const {
  if (lambda < 0.0) throw ValidationError("AttackConfig: lambda must be >= 0");
  if (steps < 1) throw ValidationError("AttackConfig: steps must be >= 1");
  if (step_size && !(*step_size > 0.0))
    throw ValidationError("AttackConfig: step_size must be > 0 when set");
  if (momentum < 0.0 || momentum >= 1.0)
    throw ValidationError("AttackConfig: momentum must be in [0, 1)");
  unroll.validate();
}

namespace {

std::array<double, 5> overshoot_summary(const PointMatrix& displacements, double lambda) {
  std::vector<double> overshoots;
  for (Eigen::Index i = 0; i < displacements.rows(); ++i) {
    const double ex = displacements.row(i).norm() - lambda;
    if (ex > 0.0) overshoots.push_back(ex);
  }
  std::array<double, 5> out = {};
  if (overshoots.empty()) return out;
  for (std::size_t i = 0; i < kOvershootQuantileProbs.size(); ++i)
    out[i] = quantile(overshoots, kOvershootQuantileProbs[i]);
  return out;
}

PerturbationResult displacement_result(const PointCloud& scan, const PointMatrix& displacements,
                                       double lambda) {
  PerturbationResult res;
  res.adversarial.points = scan.points + displacements;
  res.displacements = displacements;
  res.lambda = lambda;
  res.overshoot_quantiles = overshoot_summary(displacements, lambda);
  return res;
}

}  // namespace

PerturbationResult optimize_perturbation(const LocalizationPair& pair,
                                         const AttackConfig& config) {
  config.validate();
  const PointCloud& scan = pair.scan;
  const PointCloud map =
      pair.map.has_normals() ? pair.map : estimate_normals(pair.map);

  // The evaluation solver runs the full iteration budget; the unrolled
  // forward inside the loop is capped at K by icp_forward_with_tape.
  const IcpConfig eval_icp = config.unroll.icp;
  const IcpResult unperturbed = run_icp(scan, map, eval_icp);
  if (!unperturbed.converged)
    throw IcpNotConvergedError("optimize_perturbation: ICP does not converge on the clean scan");
  const PoseError3d err_before = pose_error(unperturbed.estimate, pair.ground_truth);

  const double step0 = config.resolved_step_size();
  double step = step0;

  PointCloud current = scan;
  current.normals.reset();
  PointCloud previous = current;

  PointMatrix velocity = PointMatrix::Zero(scan.size(), 3);
  PointMatrix best_points = current.points;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> loss_trace;
  bool warning = false;

  int consecutive_failures = 0;
  for (int iter = 0; iter <= config.steps; ++iter) {
    Tape tape;
    PoseError3d err{};
    double loss = 0.0;
    try {
      auto [res, fwd_tape] = icp_forward_with_tape(current, map, config.unroll);
      tape = std::move(fwd_tape);
      err = pose_error(res.estimate, pair.ground_truth);
      loss = config.alpha * adversarial_loss(err, config.w, config.loss_form) +
             config.beta * reconstruction_loss(scan, current, config.lambda);
    } catch (const NumericalError&) {
      ++consecutive_failures;
      if (consecutive_failures >= 3) {
        warning = true;
        break;
      }
      current = previous;
      velocity.setZero();
      step *= 0.5;
      continue;
    }
    consecutive_failures = 0;
    loss_trace.push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best_points = current.points;
    }
    if (iter == config.steps || step == 0.0) break;

    PointMatrix grad =
        config.alpha * pose_error_gradient(tape, pair.ground_truth, config.w, config.loss_form) +
        config.beta * reconstruction_loss_gradient(scan, current, config.lambda);
    // Normalized step: the largest per-point move equals the step size, so
    // progress is independent of the point count.
    const double grad_scale = grad.rowwise().norm().maxCoeff();
    if (grad_scale <= 0.0) break;  // flat loss, nothing to descend
    grad /= grad_scale;
    previous = current;
    velocity = config.momentum * velocity - step * grad;
    current.points += velocity;
  }

  PerturbationResult result = displacement_result(scan, best_points - scan.points, config.lambda);
  result.loss_trace = std::move(loss_trace);
  result.warning = warning;
  result.pose_error_before = err_before;

  // Report the attacked error under the same full solver used for the
  // clean scan; fall back to the unrolled estimate if evaluation fails.
  try {
    const IcpResult after = run_icp(result.adversarial, map, eval_icp);
    result.pose_error_after = pose_error(after.estimate, pair.ground_truth);
  } catch (const NumericalError&) {
    const auto [res, tape] = icp_forward_with_tape(result.adversarial, map, config.unroll);
    result.pose_error_after = pose_error(res.estimate, pair.ground_truth);
  }
  return result;
}

PerturbationResult baseline_uniform(const PointCloud& scan, double lambda, std::uint64_t seed) {
  if (lambda < 0.0) throw ValidationError("baseline_uniform: lambda must be >= 0");
  std::mt19937_64 rng(seed);
  const double angle = std::uniform_real_distribution<double>(0.0, 2.0 * EIGEN_PI)(rng);
  const Eigen::RowVector3d shift(lambda * std::cos(angle), lambda * std::sin(angle), 0.0);
  PointMatrix displacements(scan.size(), 3);
  displacements.rowwise() = shift;
  return displacement_result(scan, displacements, lambda);
}

PerturbationResult baseline_normal(const PointCloud& scan, double lambda) {
  if (lambda < 0.0) throw ValidationError("baseline_normal: lambda must be >= 0");
  const PointCloud with_normals = scan.has_normals() ? scan : estimate_normals(scan);

  PointMatrix displacements = PointMatrix::Zero(scan.size(), 3);
  for (Eigen::Index i = 0; i < scan.size(); ++i) {
    Eigen::Vector3d planar = with_normals.normals->row(i).transpose();
    planar.z() = 0.0;
    if (planar.norm() <= 1e-12) continue;  // normal points along z: nothing to project
    displacements.row(i) = lambda * unify_normal_sign(planar).normalized().transpose();
  }
  return displacement_result(scan, displacements, lambda);
}

}  // namespace icpattack
