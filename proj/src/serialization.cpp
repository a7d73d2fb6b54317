#include "icpattack/serialization.hpp"

#include "icpattack/errors.hpp"

namespace icpattack {

Json pose_to_json(const Pose3d& pose) {
  const Mat4<double> m = to_matrix(pose);
  Json arr = Json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) arr.push_back(m(r, c));
  return arr;
}

Pose3d pose_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 16)
    throw ValidationError("pose: expected 16 row-major numbers");
  Mat4<double> m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      const auto& v = j[static_cast<std::size_t>(4 * r + c)];
      if (!v.is_number()) throw ValidationError("pose: non-numeric entry");
      m(r, c) = v.get<double>();
    }
  if (!m.allFinite()) throw ValidationError("pose: non-finite entry");
  if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9)
    throw ValidationError("pose: bottom row must be [0 0 0 1]");
  const Eigen::Matrix3d rot = m.block<3, 3>(0, 0);
  if ((rot.transpose() * rot - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6)
    throw ValidationError("pose: rotation block is not orthonormal");
  if (rot.determinant() < 0.0) throw ValidationError("pose: rotation block is a reflection");
  return from_matrix(m);
}

Json twist_to_json(const Twist6d& xi) {
  Json arr = Json::array();
  for (int i = 0; i < 6; ++i) arr.push_back(xi(i));
  return arr;
}

Json pose_error_to_json(const PoseError3d& err) { return twist_to_json(to_twist(err)); }

Json icp_result_to_json(const IcpResult& result) {
  Json j;
  j["pose"] = pose_to_json(result.estimate);
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["final_cost"] = result.final_cost;
  j["correspondence_count"] = result.correspondence_count;
  return j;
}

Json perturbation_result_to_json(const PerturbationResult& result) {
  Json j;
  j["lambda"] = result.lambda;
  j["point_count"] = result.adversarial.size();
  j["pose_error_before"] =
      result.pose_error_before ? pose_error_to_json(*result.pose_error_before) : Json(nullptr);
  j["pose_error_after"] =
      result.pose_error_after ? pose_error_to_json(*result.pose_error_after) : Json(nullptr);
  j["max_displacement"] =
      result.displacements.rows() == 0 ? 0.0 : result.displacements.rowwise().norm().maxCoeff();
  Json probs = Json::array();
  Json values = Json::array();
  for (std::size_t i = 0; i < kOvershootQuantileProbs.size(); ++i) {
    probs.push_back(kOvershootQuantileProbs[i]);
    values.push_back(result.overshoot_quantiles[i]);
  }
  j["overshoot_quantiles"] = Json{{"probs", probs}, {"values", values}};
  j["loss_trace"] = result.loss_trace;
  j["warning"] = result.warning;
  return j;
}

Json gradient_check_report_to_json(const GradientCheckReport& report) {
  Json entries = Json::array();
  for (const auto& e : report.entries) {
    Json entry;
    entry["point"] = e.point;
    entry["axis"] = e.axis;
    entry["analytic"] = e.analytic;
    entry["finite_difference"] = e.finite_difference;
    entry["relative_error"] = e.relative_error;
    entries.push_back(std::move(entry));
  }
  Json j;
  j["pass_threshold"] = report.pass_threshold;
  j["pass_fraction"] = report.pass_fraction;
  j["excluded"] = report.excluded;
  j["checked"] = report.entries.size();
  j["pass"] = report.pass_fraction >= 0.95;
  j["entries"] = std::move(entries);
  return j;
}

}  // namespace icpattack
