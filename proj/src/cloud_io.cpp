#include "icpattack/cloud_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "icpattack/errors.hpp"

namespace icpattack {

namespace {

void check_finite(const PointCloud& cloud, const std::filesystem::path& path) {
  if (cloud.size() == 0) throw ValidationError("empty cloud: " + path.string());
  if (!cloud.points.allFinite())
    throw ValidationError("non-finite coordinates in " + path.string());
  if (cloud.normals && !cloud.normals->allFinite())
    throw ValidationError("non-finite normals in " + path.string());
}

PointMatrix to_matrix(const std::vector<std::array<float, 3>>& rows) {
  PointMatrix m(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) << rows[i][0], rows[i][1], rows[i][2];
  return m;
}

}  // namespace

PointCloud read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<std::array<float, 3>> pts, nrm;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::array<float, 6> v{};
    int got = 0;
    while (got < 6 && (ss >> v[static_cast<std::size_t>(got)])) ++got;
    if (got != 3 && got != 6)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": expected 3 or 6 values, got " + std::to_string(got));
    pts.push_back({v[0], v[1], v[2]});
    if (got == 6) nrm.push_back({v[3], v[4], v[5]});
  }
  if (!nrm.empty() && nrm.size() != pts.size())
    throw ValidationError(path.string() + ": normals on some lines but not all");
  PointCloud cloud;
  cloud.points = to_matrix(pts);
  if (!nrm.empty()) cloud.normals = to_matrix(nrm);
  check_finite(cloud, path);
  return cloud;
}

void write_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  char buf[160];
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.points.row(i).cast<float>();
    int len;
    if (cloud.normals) {
      const auto n = cloud.normals->row(i).cast<float>();
      len = std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", p[0], p[1], p[2],
                          n[0], n[1], n[2]);
    } else {
      len = std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", p[0], p[1], p[2]);
    }
    out.write(buf, len);
  }
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line) || line != "ply")
    throw ValidationError(path.string() + ": not a PLY file");

  Eigen::Index count = -1;
  std::vector<std::string> props;
  bool little_endian = false;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      little_endian = (fmt == "binary_little_endian");
    } else if (word == "element") {
      std::string name;
      ss >> name >> count;
      if (name != "vertex")
        throw ValidationError(path.string() + ": unsupported element " + name);
    } else if (word == "property") {
      std::string type, name;
      ss >> type >> name;
      if (type != "float")
        throw ValidationError(path.string() + ": unsupported property type " + type);
      props.push_back(name);
    } else if (word == "end_header") {
      break;
    }
  }
  if (!little_endian) throw ValidationError(path.string() + ": expected binary_little_endian");
  if (count <= 0) throw ValidationError(path.string() + ": missing vertex element");

  const bool with_normals = props.size() == 6;
  if (!(props.size() == 3 || with_normals) || props[0] != "x" || props[1] != "y" ||
      props[2] != "z")
    throw ValidationError(path.string() + ": unsupported property layout");

  const std::size_t stride = props.size();
  std::vector<float> raw(static_cast<std::size_t>(count) * stride);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!in) throw ValidationError(path.string() + ": truncated vertex data");

  PointCloud cloud;
  cloud.points.resize(count, 3);
  if (with_normals) cloud.normals = PointMatrix(count, 3);
  for (Eigen::Index i = 0; i < count; ++i) {
    const float* row = raw.data() + static_cast<std::size_t>(i) * stride;
    cloud.points.row(i) << row[0], row[1], row[2];
    if (with_normals) cloud.normals->row(i) << row[3], row[4], row[5];
  }
  check_finite(cloud, path);
  return cloud;
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
  out << "end_header\n";

  const std::size_t stride = cloud.normals ? 6 : 3;
  std::vector<float> raw(static_cast<std::size_t>(cloud.size()) * stride);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    float* row = raw.data() + static_cast<std::size_t>(i) * stride;
    for (int c = 0; c < 3; ++c) row[c] = static_cast<float>(cloud.points(i, c));
    if (cloud.normals)
      for (int c = 0; c < 3; ++c) row[3 + c] = static_cast<float>((*cloud.normals)(i, c));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
}

PointCloud read_cloud(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return read_csv(path);
  if (ext == ".ply") return read_ply(path);
  throw ValidationError("unsupported cloud format: " + path.string());
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return write_csv(path, cloud);
  if (ext == ".ply") return write_ply(path, cloud);
  throw ValidationError("unsupported cloud format: " + path.string());
}

}  // namespace icpattack
