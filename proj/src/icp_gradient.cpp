#include "icpattack/icp_gradient.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "icpattack/errors.hpp"

namespace icpattack {

void GradientConfig::validate() const {
  if (unroll_iterations < 1)
    throw ValidationError("GradientConfig: unroll_iterations must be >= 1");
  if (!(fd_epsilon > 0.0)) throw ValidationError("GradientConfig: fd_epsilon must be > 0");
  icp.validate();
}

std::pair<IcpResult, Tape> icp_forward_with_tape(const PointCloud& scan, const PointCloud& map,
                                                 const GradientConfig& config) {
  config.validate();
  if (map.size() == 0) throw ValidationError("icp_forward_with_tape: empty map");

  Tape tape;
  tape.scan = scan;
  tape.map = map.has_normals() ? map : estimate_normals(map);
  tape.icp = config.icp;
  tape.icp.max_iterations = config.unroll_iterations;
  tape.differentiate_weights = config.differentiate_weights;

  const SpatialIndex index = build_index(tape.map);
  const IcpResult result = run_icp_traced(scan, tape.map, index, tape.icp, &tape.steps);
  tape.final_pose = result.estimate;
  return {result, tape};
}

namespace {

double cauchy_weight_derivative(double residual, double k) {
  const double w = cauchy_weight(residual, k);
  return -2.0 * residual / (k * k) * w * w;
}

Eigen::VectorXd gather(const Twist6d& full, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = full(idx[i]);
  return out;
}

Twist6d scatter(const Eigen::VectorXd& reduced, const std::vector<int>& idx) {
  Twist6d out = Twist6d::Zero();
  for (std::size_t i = 0; i < idx.size(); ++i) out(idx[i]) = reduced(static_cast<Eigen::Index>(i));
  return out;
}

}  // namespace

PointMatrix pose_error_gradient(const Tape& tape, const Pose3d& t_gt, const LossWeights& w,
                                AdvLossForm form) {
  PointMatrix grad = PointMatrix::Zero(tape.scan.size(), 3);
  if (tape.steps.empty()) return grad;

  const Twist6d xi = log_se3(tape.final_pose * inverse(t_gt));
  const PoseError3d err{xi.head<3>(), xi.tail<3>()};
  const Twist6d dl_dxi = adversarial_loss_gradient(err, w, form);
  if (dl_dxi.isZero(0.0)) return grad;

  const std::vector<int> free_idx = free_dof_indices(tape.icp.dof_mask);
  const double k = tape.icp.cauchy_k;

  // Left-trivialized gradient at the final pose: xi responds to a left
  // perturbation of T_K through the inverse left Jacobian at xi.
  Twist6d g = inv_left_jacobian_se3(xi).transpose() * dl_dxi;

  for (auto it = tape.steps.rbegin(); it != tape.steps.rend(); ++it) {
    const IcpStepTrace& step = *it;
    if (step.a_free.rows() == 0)
      throw NumericalError("pose_error_gradient: tape iteration lacks a solve record");

    // dL/d delta, then the implicit solve adjoint z = A^{-1} u.
    const Twist6d u6 = left_jacobian_se3(step.delta).transpose() * g;
    const Eigen::VectorXd z_free = step.a_free.ldlt().solve(gather(u6, free_idx));
    const Twist6d z = scatter(z_free, free_idx);

    // Pass-through of the pose chain at fixed delta.
    Twist6d g_prev = adjoint(exp_se3(step.delta)).transpose() * g;

    const Eigen::Matrix3d rot = step.pose_before.rotation;
    for (std::size_t ci = 0; ci < step.correspondences.size(); ++ci) {
      const Correspondence& c = step.correspondences[ci];
      const double r = step.residuals[ci];
      const double wgt = step.weights[ci];

      const Eigen::Vector3d p = tape.scan.points.row(c.scan_index).transpose();
      const Eigen::Vector3d n = tape.map.normals->row(c.map_index).transpose();
      const Eigen::Vector3d y = step.pose_before * p;

      Twist6d j;
      j.head<3>() = n;
      j.tail<3>() = y.cross(n);
      const double a_i = j.dot(z);
      const double s_i = j.dot(step.delta);

      // Adjoints of A = sum w J^T J and b = -sum w r J^T under dL = z^T db - z^T dA delta.
      double dl_dr = -wgt * a_i;
      if (tape.differentiate_weights) {
        const double dl_dw = -a_i * (r + s_i);
        dl_dr += dl_dw * cauchy_weight_derivative(r, k);
      }
      // Rotational block of dL/dJ feeds back through y x n.
      const Eigen::Vector3d c_phi =
          -wgt * (r + s_i) * z.tail<3>() - wgt * a_i * step.delta.tail<3>();
      const Eigen::Vector3d g_y = dl_dr * n + n.cross(c_phi);

      grad.row(c.scan_index) += (rot.transpose() * g_y).transpose();
      g_prev.head<3>() += g_y;
      g_prev.tail<3>() += y.cross(g_y);
    }
    g = g_prev;
  }
  return grad;
}

namespace {

bool same_associations(const Tape& a, const Tape& b) {
  if (a.steps.size() != b.steps.size()) return false;
  for (std::size_t s = 0; s < a.steps.size(); ++s) {
    const auto& ca = a.steps[s].correspondences;
    const auto& cb = b.steps[s].correspondences;
    if (ca.size() != cb.size()) return false;
    for (std::size_t i = 0; i < ca.size(); ++i)
      if (ca[i].scan_index != cb[i].scan_index || ca[i].map_index != cb[i].map_index)
        return false;
  }
  return true;
}

}  // namespace

GradientCheckReport finite_difference_check(const PointCloud& scan, const PointCloud& map,
                                            const GradientConfig& config, const Pose3d& t_gt,
                                            const LossWeights& w, int sample_coordinates,
                                            AdvLossForm form, double pass_threshold) {
  if (sample_coordinates < 1)
    throw ValidationError("finite_difference_check: need at least one coordinate");

  const auto [result, tape] = icp_forward_with_tape(scan, map, config);
  (void)result;
  const PointMatrix analytic = pose_error_gradient(tape, t_gt, w, form);

  auto loss_at = [&](const PointCloud& probe) {
    const auto [res, probe_tape] = icp_forward_with_tape(probe, map, config);
    return std::make_pair(adversarial_loss(pose_error(res.estimate, t_gt), w, form), probe_tape);
  };

  GradientCheckReport report;
  report.pass_threshold = pass_threshold;
  const Eigen::Index total = scan.size() * 3;
  const int samples = static_cast<int>(std::min<Eigen::Index>(sample_coordinates, total));
  const double eps = config.fd_epsilon;

  int passed = 0;
  for (int s = 0; s < samples; ++s) {
    const Eigen::Index coord = (total * s) / samples;
    const Eigen::Index point = coord / 3;
    const int axis = static_cast<int>(coord % 3);

    PointCloud plus = scan;
    plus.points(point, axis) += eps;
    PointCloud minus = scan;
    minus.points(point, axis) -= eps;
    const auto [loss_plus, tape_plus] = loss_at(plus);
    const auto [loss_minus, tape_minus] = loss_at(minus);

    if (!same_associations(tape_plus, tape_minus)) {
      ++report.excluded;
      continue;
    }

    const double fd = (loss_plus - loss_minus) / (2.0 * eps);
    const double an = analytic(point, axis);
    const double scale = std::max({std::abs(fd), std::abs(an), 1e-12});
    const double rel = std::abs(fd - an) / scale;
    report.entries.push_back({point, axis, an, fd, rel});
    if (rel <= pass_threshold) ++passed;
  }

  report.pass_fraction =
      report.entries.empty() ? 1.0 : static_cast<double>(passed) / report.entries.size();
  return report;
}

}  // namespace icpattack
