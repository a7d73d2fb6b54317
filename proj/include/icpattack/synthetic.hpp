#pragma once

#include <cstdint>
#include <string>

#include "icpattack/icp.hpp"
#include "icpattack/localization_pair.hpp"
#include "icpattack/point_cloud.hpp"

namespace icpattack {

/// 2D boundary shapes standing in for object scans. room_with_alcoves is
/// an elongated room whose long featureless walls under-constrain the
/// longitudinal direction; it exists to exercise landmark-sparse maps.
enum class ShapeKind { rectangle, l_shape, cross, ring, room_with_alcoves };

ShapeKind shape_kind_from_string(const std::string& name);
std::string to_string(ShapeKind kind);

/// Boundary-sampled shape at z = 0, normalized into the unit circle.
/// `density` is points per unit length of the unnormalized boundary;
/// sample positions are stratified along arc length and seeded.
PointCloud generate_shape(ShapeKind kind, double density, std::uint64_t seed);

/// Dataset recipe: scan size, scan noise, and ground-truth transform
/// ranges, plus the matching solver configuration.
struct PairProfile {
  std::string name;
  Eigen::Index sample_count = 2048;
  double noise_sigma = 0.025;
  AxisIntervals trans_range;
  AxisIntervals rot_range_deg;
  IcpConfig icp;
};

/// Unit-circle objects: 2048-point scans, sigma 0.025, x/y in ±0.08,
/// yaw in ±10 degrees.
PairProfile shapenet_pair_profile();
/// Driving scale: x/y/z in ±0.3 m, roll/pitch/yaw in ±10 degrees.
PairProfile boreas_pair_profile();
PairProfile pair_profile(const std::string& name);

/// Builds a localization pair from a map: subsample, add noise, move the
/// scan into its own frame with the inverse of a sampled ground truth.
/// Bit-deterministic for a fixed seed. Map normals are computed here and
/// cached on the pair.
LocalizationPair make_localization_pair(const PointCloud& map, const PairProfile& profile,
                                        std::uint64_t seed);

}  // namespace icpattack
