#pragma once

#include <filesystem>
#include <string>

#include "icpattack/point_cloud.hpp"

namespace icpattack {

// Cloud files carry float32 coordinates. CSV lines are
// "x,y,z" or "x,y,z,nx,ny,nz"; PLY is binary little-endian with float
// x/y/z (and nx/ny/nz when normals are present).

PointCloud read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const PointCloud& cloud);

PointCloud read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);

/// Dispatches on extension: .csv / .ply.
PointCloud read_cloud(const std::filesystem::path& path);
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace icpattack
