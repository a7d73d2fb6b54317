#pragma once

#include <json.hpp>

#include "icpattack/attack.hpp"
#include "icpattack/icp.hpp"
#include "icpattack/icp_gradient.hpp"
#include "icpattack/se3.hpp"

namespace icpattack {

/// All JSON in this project uses insertion-ordered objects so serialized
/// output is reproducible byte for byte.
using Json = nlohmann::ordered_json;

Json pose_to_json(const Pose3d& pose);  ///< row-major 4x4, 16 numbers
/// Parses and validates a rigid transform (orthonormal rotation,
/// determinant +1, affine bottom row). Throws ValidationError otherwise.
Pose3d pose_from_json(const Json& j);

Json twist_to_json(const Twist6d& xi);  ///< [rho_x, rho_y, rho_z, phi_x, phi_y, phi_z]
Json pose_error_to_json(const PoseError3d& err);

Json icp_result_to_json(const IcpResult& result);
Json perturbation_result_to_json(const PerturbationResult& result);
Json gradient_check_report_to_json(const GradientCheckReport& report);

}  // namespace icpattack
