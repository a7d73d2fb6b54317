#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>

#include "icpattack/errors.hpp"

namespace icpattack {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Vec6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Mat6 = Eigen::Matrix<Scalar, 6, 6>;
template <typename Scalar>
using Mat4 = Eigen::Matrix<Scalar, 4, 4>;

/// Rigid transform in SE(3). Acts on points as R*p + t.
template <typename Scalar>
struct Pose {
  Mat3<Scalar> rotation = Mat3<Scalar>::Identity();
  Vec3<Scalar> translation = Vec3<Scalar>::Zero();

  static Pose Identity() { return Pose{}; }
};

/// Twist split per Eq-style block layout: translation part first.
template <typename Scalar>
struct PoseError {
  Vec3<Scalar> rho = Vec3<Scalar>::Zero();  ///< translation error
  Vec3<Scalar> phi = Vec3<Scalar>::Zero();  ///< rotation error, radians
};

using Pose3d = Pose<double>;
using PoseError3d = PoseError<double>;
using Twist6d = Vec6<double>;

// Threshold below which exp/log switch to series expansions; avoids
// catastrophic cancellation near the identity.
inline constexpr double kSmallAngle = 1e-8;

template <typename Derived>
Mat3<typename Derived::Scalar> hat(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  Mat3<S> m;
  m << S(0), -v.z(), v.y(),
       v.z(), S(0), -v.x(),
      -v.y(), v.x(), S(0);
  return m;
}

template <typename Derived>
Vec3<typename Derived::Scalar> vee(const Eigen::MatrixBase<Derived>& m) {
  return Vec3<typename Derived::Scalar>(m(2, 1), m(0, 2), m(1, 0));
}

template <typename Scalar>
Pose<Scalar> compose(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

template <typename Scalar>
Pose<Scalar> inverse(const Pose<Scalar>& p) {
  Mat3<Scalar> rt = p.rotation.transpose();
  return {rt, -(rt * p.translation)};
}

template <typename Scalar>
Pose<Scalar> operator*(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return compose(a, b);
}

template <typename Scalar, typename Derived>
Vec3<typename Derived::Scalar> operator*(const Pose<Scalar>& p,
                                         const Eigen::MatrixBase<Derived>& x) {
  return p.rotation * x + p.translation;
}

template <typename Scalar>
Mat4<Scalar> to_matrix(const Pose<Scalar>& p) {
  Mat4<Scalar> m = Mat4<Scalar>::Identity();
  m.template block<3, 3>(0, 0) = p.rotation;
  m.template block<3, 1>(0, 3) = p.translation;
  return m;
}

template <typename Derived>
Pose<typename Derived::Scalar> from_matrix(const Eigen::MatrixBase<Derived>& m) {
  Pose<typename Derived::Scalar> p;
  p.rotation = m.template block<3, 3>(0, 0);
  p.translation = m.template block<3, 1>(0, 3);
  return p;
}

/// SO(3) exponential (Rodrigues).
template <typename Derived>
Mat3<typename Derived::Scalar> exp_so3(const Eigen::MatrixBase<Derived>& phi) {
  using S = typename Derived::Scalar;
  const S theta = phi.norm();
  const Mat3<S> k = hat(phi);
  S a, b;
  if (theta < S(kSmallAngle)) {
    a = S(1) - theta * theta / S(6);
    b = S(0.5) - theta * theta / S(24);
  } else {
    a = std::sin(theta) / theta;
    b = (S(1) - std::cos(theta)) / (theta * theta);
  }
  return Mat3<S>::Identity() + a * k + b * k * k;
}

/// SO(3) logarithm; angle in [0, pi]. The pi branch is handled by the
/// quaternion-based axis extraction inside Eigen::AngleAxis.
template <typename Derived>
Vec3<typename Derived::Scalar> log_so3(const Eigen::MatrixBase<Derived>& rot) {
  using S = typename Derived::Scalar;
  const Mat3<S> r = rot;
  const Eigen::AngleAxis<S> aa(r);
  return aa.angle() * aa.axis();
}

/// SO(3) left Jacobian J_l(phi); exp(phi + d) ~= exp(J_l d) * exp(phi).
template <typename Derived>
Mat3<typename Derived::Scalar> left_jacobian_so3(const Eigen::MatrixBase<Derived>& phi) {
  using S = typename Derived::Scalar;
  const S theta = phi.norm();
  const Mat3<S> k = hat(phi);
  S b, c;
  if (theta < S(kSmallAngle)) {
    b = S(0.5) - theta * theta / S(24);
    c = S(1) / S(6) - theta * theta / S(120);
  } else {
    b = (S(1) - std::cos(theta)) / (theta * theta);
    c = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  return Mat3<S>::Identity() + b * k + c * k * k;
}

/// Closed-form inverse of the SO(3) left Jacobian.
template <typename Derived>
Mat3<typename Derived::Scalar> inv_left_jacobian_so3(const Eigen::MatrixBase<Derived>& phi) {
  using S = typename Derived::Scalar;
  const S theta = phi.norm();
  const Mat3<S> k = hat(phi);
  S c;
  if (theta < S(kSmallAngle)) {
    c = S(1) / S(12) + theta * theta / S(720);
  } else {
    const S half = theta / S(2);
    c = (S(1) - half * std::cos(half) / std::sin(half)) / (theta * theta);
  }
  return Mat3<S>::Identity() - S(0.5) * k + c * k * k;
}

/// SE(3) exponential of a twist xi = [rho; phi].
template <typename Derived>
Pose<typename Derived::Scalar> exp_se3(const Eigen::MatrixBase<Derived>& xi) {
  using S = typename Derived::Scalar;
  const Vec3<S> rho = xi.template head<3>();
  const Vec3<S> phi = xi.template tail<3>();
  Pose<S> p;
  p.rotation = exp_so3(phi);
  p.translation = left_jacobian_so3(phi) * rho;
  return p;
}

/// SE(3) logarithm; rotation angle returned in (-pi, pi].
template <typename Scalar>
Vec6<Scalar> log_se3(const Pose<Scalar>& p) {
  const Vec3<Scalar> phi = log_so3(p.rotation);
  Vec6<Scalar> xi;
  xi.template head<3>() = inv_left_jacobian_so3(phi) * p.translation;
  xi.template tail<3>() = phi;
  return xi;
}

/// Adjoint of T for the [rho; phi] ordering: Ad(T) = [R, t^ R; 0, R].
template <typename Scalar>
Mat6<Scalar> adjoint(const Pose<Scalar>& p) {
  Mat6<Scalar> ad = Mat6<Scalar>::Zero();
  ad.template block<3, 3>(0, 0) = p.rotation;
  ad.template block<3, 3>(0, 3) = hat(p.translation) * p.rotation;
  ad.template block<3, 3>(3, 3) = p.rotation;
  return ad;
}

namespace detail {

// Q block of the SE(3) left Jacobian (Barfoot-style closed form).
template <typename Scalar>
Mat3<Scalar> se3_jacobian_q(const Vec3<Scalar>& rho, const Vec3<Scalar>& phi) {
  using S = Scalar;
  const S theta = phi.norm();
  const Mat3<S> rx = hat(rho);
  const Mat3<S> px = hat(phi);
  S m1, m2, m3;
  if (theta < S(0.1)) {
    const S t2 = theta * theta;
    const S t4 = t2 * t2;
    m1 = S(1) / S(6) - t2 / S(120) + t4 / S(5040);
    m2 = S(1) / S(24) - t2 / S(720) + t4 / S(40320);
    m3 = S(1) / S(120) - t2 / S(2520) + t4 / S(120960);
  } else {
    const S t2 = theta * theta;
    const S t3 = t2 * theta;
    const S t4 = t3 * theta;
    const S t5 = t4 * theta;
    const S s = std::sin(theta);
    const S c = std::cos(theta);
    m1 = (theta - s) / t3;
    m2 = -(S(1) - t2 / S(2) - c) / t4;
    m3 = -S(0.5) * ((S(1) - t2 / S(2) - c) / t4 - S(3) * (theta - s - t3 / S(6)) / t5);
  }
  const Mat3<S> pxrx = px * rx;
  const Mat3<S> rxpx = rx * px;
  const Mat3<S> pxrxpx = pxrx * px;
  return S(0.5) * rx + m1 * (pxrx + rxpx + pxrxpx) +
         m2 * (px * pxrx + rxpx * px - S(3) * pxrxpx) +
         m3 * (pxrxpx * px + px * pxrxpx);
}

}  // namespace detail

/// SE(3) left Jacobian: exp(xi + d) ~= exp(J_l(xi) d) * exp(xi).
template <typename Derived>
Mat6<typename Derived::Scalar> left_jacobian_se3(const Eigen::MatrixBase<Derived>& xi) {
  using S = typename Derived::Scalar;
  const Vec3<S> rho = xi.template head<3>();
  const Vec3<S> phi = xi.template tail<3>();
  const Mat3<S> j = left_jacobian_so3(phi);
  Mat6<S> out = Mat6<S>::Zero();
  out.template block<3, 3>(0, 0) = j;
  out.template block<3, 3>(3, 3) = j;
  out.template block<3, 3>(0, 3) = detail::se3_jacobian_q(rho, phi);
  return out;
}

/// Inverse SE(3) left Jacobian: log(exp(eps) exp(xi)) ~= xi + J_l^{-1}(xi) eps.
template <typename Derived>
Mat6<typename Derived::Scalar> inv_left_jacobian_se3(const Eigen::MatrixBase<Derived>& xi) {
  using S = typename Derived::Scalar;
  const Vec3<S> rho = xi.template head<3>();
  const Vec3<S> phi = xi.template tail<3>();
  const Mat3<S> jinv = inv_left_jacobian_so3(phi);
  const Mat3<S> q = detail::se3_jacobian_q(rho, phi);
  Mat6<S> out = Mat6<S>::Zero();
  out.template block<3, 3>(0, 0) = jinv;
  out.template block<3, 3>(3, 3) = jinv;
  out.template block<3, 3>(0, 3) = -jinv * q * jinv;
  return out;
}

/// Pose error of Eq.-1 form: xi = log(T_hat * T_gt^{-1}), split into (rho, phi).
template <typename Scalar>
PoseError<Scalar> pose_error(const Pose<Scalar>& t_hat, const Pose<Scalar>& t_gt) {
  const Vec6<Scalar> xi = log_se3(compose(t_hat, inverse(t_gt)));
  return {xi.template head<3>(), xi.template tail<3>()};
}

template <typename Scalar>
Vec6<Scalar> to_twist(const PoseError<Scalar>& e) {
  Vec6<Scalar> xi;
  xi.template head<3>() = e.rho;
  xi.template tail<3>() = e.phi;
  return xi;
}

/// Closed interval used for per-axis sampling ranges.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

using AxisIntervals = std::array<Interval, 3>;

/// Uniform random pose: per-axis translations plus intrinsic z*y*x Euler
/// angles, each uniform in its interval. Deterministic for a fixed seed.
inline Pose3d sample_random_pose(const AxisIntervals& trans_range,
                                 const AxisIntervals& rot_range_deg,
                                 std::uint64_t seed) {
  for (const auto& iv : trans_range)
    if (!(iv.lo <= iv.hi)) throw ValidationError("sample_random_pose: empty translation interval");
  for (const auto& iv : rot_range_deg)
    if (!(iv.lo <= iv.hi)) throw ValidationError("sample_random_pose: empty rotation interval");

  std::mt19937_64 rng(seed);
  auto draw = [&rng](const Interval& iv) {
    if (iv.lo == iv.hi) return iv.lo;
    return std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng);
  };

  Vec3<double> t;
  for (int i = 0; i < 3; ++i) t[i] = draw(trans_range[i]);
  Vec3<double> angles_deg;
  for (int i = 0; i < 3; ++i) angles_deg[i] = draw(rot_range_deg[i]);

  constexpr double kDegToRad = EIGEN_PI / 180.0;
  const Eigen::AngleAxisd rz(angles_deg.z() * kDegToRad, Eigen::Vector3d::UnitZ());
  const Eigen::AngleAxisd ry(angles_deg.y() * kDegToRad, Eigen::Vector3d::UnitY());
  const Eigen::AngleAxisd rx(angles_deg.x() * kDegToRad, Eigen::Vector3d::UnitX());

  Pose3d p;
  p.rotation = (rz * ry * rx).toRotationMatrix();
  p.translation = t;
  return p;
}

}  // namespace icpattack
