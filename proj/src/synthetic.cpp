#include "icpattack/synthetic.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "icpattack/errors.hpp"

namespace icpattack {

ShapeKind shape_kind_from_string(const std::string& name) {
  if (name == "rectangle") return ShapeKind::rectangle;
  if (name == "l-shape") return ShapeKind::l_shape;
  if (name == "cross") return ShapeKind::cross;
  if (name == "ring") return ShapeKind::ring;
  if (name == "room-with-alcoves") return ShapeKind::room_with_alcoves;
  throw ValidationError("unknown shape kind: " + name);
}

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::rectangle: return "rectangle";
    case ShapeKind::l_shape: return "l-shape";
    case ShapeKind::cross: return "cross";
    case ShapeKind::ring: return "ring";
    case ShapeKind::room_with_alcoves: return "room-with-alcoves";
  }
  throw ValidationError("unknown shape kind");
}

namespace {

struct Polyline {
  std::vector<Eigen::Vector2d> vertices;
  bool closed = false;
};

std::vector<Polyline> shape_outline(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::rectangle:
      return {{{{0, 0}, {2, 0}, {2, 1.2}, {0, 1.2}}, true}};
    case ShapeKind::l_shape:
      return {{{{0, 0}, {2, 0}, {2, 0.8}, {0.8, 0.8}, {0.8, 2}, {0, 2}}, true}};
    case ShapeKind::cross:
      return {{{{0.7, 0}, {1.3, 0}, {1.3, 0.7}, {2, 0.7}, {2, 1.3}, {1.3, 1.3},
                {1.3, 2}, {0.7, 2}, {0.7, 1.3}, {0, 1.3}, {0, 0.7}, {0.7, 0.7}},
               true}};
    case ShapeKind::room_with_alcoves:
      // Open-ended room: two long walls, the upper one carrying two small
      // alcoves. Only the alcove sides constrain the long axis.
      return {{{{0, 0}, {4, 0}}, false},
              {{{0, 1},   {1.0, 1}, {1.0, 1.25}, {1.3, 1.25}, {1.3, 1},
                {2.9, 1}, {2.9, 1.25}, {3.2, 1.25}, {3.2, 1}, {4, 1}},
               false}};
    case ShapeKind::ring:
      throw ValidationError("ring outline is parametric");  // handled by caller
  }
  throw ValidationError("unknown shape kind");
}

PointCloud sample_ring(double density, std::mt19937_64& rng) {
  const double circumference = 2.0 * EIGEN_PI;
  const auto count = std::max<Eigen::Index>(8, std::llround(density * circumference));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud cloud;
  cloud.points.resize(count, 3);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double theta =
        circumference * (static_cast<double>(i) + u(rng)) / static_cast<double>(count);
    cloud.points.row(i) << std::cos(theta), std::sin(theta), 0.0;
  }
  return cloud;
}

PointCloud sample_outline(const std::vector<Polyline>& outline, double density,
                          std::mt19937_64& rng) {
  struct Segment {
    Eigen::Vector2d a, b;
    double length;
  };
  std::vector<Segment> segments;
  double total = 0.0;
  for (const auto& line : outline) {
    const std::size_t n = line.vertices.size();
    const std::size_t count = line.closed ? n : n - 1;
    for (std::size_t i = 0; i < count; ++i) {
      const Eigen::Vector2d a = line.vertices[i];
      const Eigen::Vector2d b = line.vertices[(i + 1) % n];
      const double len = (b - a).norm();
      segments.push_back({a, b, len});
      total += len;
    }
  }

  const auto count = std::max<Eigen::Index>(8, std::llround(density * total));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud cloud;
  cloud.points.resize(count, 3);
  for (Eigen::Index i = 0; i < count; ++i) {
    double s = total * (static_cast<double>(i) + u(rng)) / static_cast<double>(count);
    std::size_t seg = 0;
    while (seg + 1 < segments.size() && s > segments[seg].length) {
      s -= segments[seg].length;
      ++seg;
    }
    const double t = std::min(s / segments[seg].length, 1.0);
    const Eigen::Vector2d p = segments[seg].a + t * (segments[seg].b - segments[seg].a);
    cloud.points.row(i) << p.x(), p.y(), 0.0;
  }
  return cloud;
}

}  // namespace

PointCloud generate_shape(ShapeKind kind, double density, std::uint64_t seed) {
  if (!(density > 0.0)) throw ValidationError("generate_shape: density must be > 0");
  std::mt19937_64 rng(seed);
  const PointCloud raw = kind == ShapeKind::ring ? sample_ring(density, rng)
                                                 : sample_outline(shape_outline(kind), density, rng);
  return normalize_to_unit(raw);
}

PairProfile shapenet_pair_profile() {
  PairProfile p;
  p.name = "shapenet";
  p.sample_count = 2048;
  p.noise_sigma = 0.025;
  p.trans_range = {Interval{-0.08, 0.08}, Interval{-0.08, 0.08}, Interval{0, 0}};
  p.rot_range_deg = {Interval{0, 0}, Interval{0, 0}, Interval{-10, 10}};
  p.icp = shapenet_icp_config();
  return p;
}

PairProfile boreas_pair_profile() {
  PairProfile p;
  p.name = "boreas";
  p.sample_count = 2048;
  p.noise_sigma = 0.0;  // live scans carry sensor noise already
  p.trans_range = {Interval{-0.3, 0.3}, Interval{-0.3, 0.3}, Interval{-0.3, 0.3}};
  p.rot_range_deg = {Interval{-10, 10}, Interval{-10, 10}, Interval{-10, 10}};
  p.icp = boreas_icp_config();
  return p;
}

PairProfile pair_profile(const std::string& name) {
  if (name == "shapenet") return shapenet_pair_profile();
  if (name == "boreas") return boreas_pair_profile();
  throw ValidationError("unknown pair profile: " + name);
}

LocalizationPair make_localization_pair(const PointCloud& map, const PairProfile& profile,
                                        std::uint64_t seed) {
  if (map.size() < profile.sample_count)
    throw ValidationError("make_localization_pair: map smaller than the scan sample count");

  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(map.size()));
  std::iota(idx.begin(), idx.end(), 0);
  for (Eigen::Index i = 0; i < profile.sample_count; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, map.size() - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }

  PointCloud scan;
  scan.points.resize(profile.sample_count, 3);
  for (Eigen::Index i = 0; i < profile.sample_count; ++i)
    scan.points.row(i) = map.points.row(idx[static_cast<std::size_t>(i)]);

  const std::uint64_t noise_seed = rng();
  scan = add_gaussian_noise(scan, profile.noise_sigma, noise_seed);

  const std::uint64_t pose_seed = rng();
  const Pose3d gt = sample_random_pose(profile.trans_range, profile.rot_range_deg, pose_seed);
  scan = transform_cloud(scan, inverse(gt));

  LocalizationPair pair;
  pair.id = profile.name + "-" + std::to_string(seed);
  pair.scan = std::move(scan);
  pair.map = map.has_normals() ? map : estimate_normals(map);
  pair.ground_truth = gt;
  return pair;
}

}  // namespace icpattack
