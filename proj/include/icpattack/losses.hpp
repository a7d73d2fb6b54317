#pragma once

#include <Eigen/Core>
#include <cmath>

#include "icpattack/errors.hpp"
#include "icpattack/point_cloud.hpp"
#include "icpattack/se3.hpp"

namespace icpattack {

using LossWeights = Eigen::Matrix<double, 6, 1>;  ///< w1..w6, rho then phi

/// How the weighted pose-error norm is formed. `elementwise` scales each
/// error component by its weight before taking the norm; `scalar_product`
/// is the literal inner-product reading, whose sign cancellations make it
/// a weaker default.
enum class AdvLossForm { elementwise, scalar_product };

/// L_adv: the negated, weighted pose-error magnitude (more error, lower loss).
inline double adversarial_loss(const PoseError3d& err, const LossWeights& w,
                               AdvLossForm form = AdvLossForm::elementwise) {
  if (form == AdvLossForm::scalar_product)
    return -std::abs(w.head<3>().dot(err.rho)) - std::abs(w.tail<3>().dot(err.phi));
  return -(w.head<3>().cwiseProduct(err.rho)).norm() -
         (w.tail<3>().cwiseProduct(err.phi)).norm();
}

/// dL_adv / d(xi) as a 6-vector, [d/d rho; d/d phi]. Zero blocks where the
/// weighted error vanishes.
inline Twist6d adversarial_loss_gradient(const PoseError3d& err, const LossWeights& w,
                                         AdvLossForm form = AdvLossForm::elementwise) {
  Twist6d g = Twist6d::Zero();
  if (form == AdvLossForm::scalar_product) {
    const double a = w.head<3>().dot(err.rho);
    const double b = w.tail<3>().dot(err.phi);
    if (a != 0.0) g.head<3>() = -(a > 0 ? 1.0 : -1.0) * w.head<3>();
    if (b != 0.0) g.tail<3>() = -(b > 0 ? 1.0 : -1.0) * w.tail<3>();
    return g;
  }
  const Eigen::Vector3d u = w.head<3>().cwiseProduct(err.rho);
  const Eigen::Vector3d v = w.tail<3>().cwiseProduct(err.phi);
  const double un = u.norm();
  const double vn = v.norm();
  if (un > 0.0) g.head<3>() = -(u / un).cwiseProduct(w.head<3>());
  if (vn > 0.0) g.tail<3>() = -(v / vn).cwiseProduct(w.tail<3>());
  return g;
}

/// Dead-zone shrinkage: zero inside [-lambda, lambda], the excess outside.
inline double softshrink(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

/// Mean squared shrunk displacement norm; zero iff every per-point
/// displacement stays within the bound.
inline double reconstruction_loss(const PointCloud& original, const PointCloud& adversarial,
                                  double lambda) {
  if (original.size() != adversarial.size())
    throw ValidationError("reconstruction_loss: point count mismatch");
  const Eigen::VectorXd norms = (adversarial.points - original.points).rowwise().norm();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    const double s = softshrink(norms(i), lambda);
    sum += s * s;
  }
  return sum / static_cast<double>(original.size());
}

/// d L_rec / d adversarial points, N x 3.
inline PointMatrix reconstruction_loss_gradient(const PointCloud& original,
                                                const PointCloud& adversarial, double lambda) {
  if (original.size() != adversarial.size())
    throw ValidationError("reconstruction_loss_gradient: point count mismatch");
  const Eigen::Index n = original.size();
  PointMatrix grad = PointMatrix::Zero(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVector3d d = adversarial.points.row(i) - original.points.row(i);
    const double dn = d.norm();
    if (dn <= lambda || dn == 0.0) continue;
    grad.row(i) = (2.0 / static_cast<double>(n)) * (dn - lambda) * (d / dn);
  }
  return grad;
}

/// Eq.-2 style combination: alpha * L_adv + beta * L_rec.
inline double total_loss(const PoseError3d& err, const PointCloud& original,
                         const PointCloud& adversarial, double alpha, double beta, double lambda,
                         const LossWeights& w, AdvLossForm form = AdvLossForm::elementwise) {
  return alpha * adversarial_loss(err, w, form) +
         beta * reconstruction_loss(original, adversarial, lambda);
}

}  // namespace icpattack
