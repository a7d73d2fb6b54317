#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "icpattack/cloud_io.hpp"

using namespace icpattack;
namespace fs = std::filesystem;

namespace {

PointCloud random_cloud(Eigen::Index n, std::uint64_t seed, bool with_normals) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  PointCloud c;
  c.points.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) c.points.row(i) << u(rng), u(rng), u(rng);
  if (with_normals) {
    c.normals = PointMatrix(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::RowVector3d v(u(rng), u(rng), u(rng));
      c.normals->row(i) = v.normalized();
    }
  }
  return c;
}

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "icpattack_io_test";
  fs::create_directories(dir);
  return dir / name;
}

// Round-trips must be exact at float32 resolution: writing quantizes to
// float, so a second round-trip has to reproduce bytes.
void check_roundtrip(const PointCloud& cloud, const fs::path& path) {
  write_cloud(path, cloud);
  const PointCloud back = read_cloud(path);
  REQUIRE(back.size() == cloud.size());
  REQUIRE(back.has_normals() == cloud.has_normals());
  CHECK((back.points - cloud.points).cwiseAbs().maxCoeff() < 1e-5);

  write_cloud(path, back);
  const PointCloud again = read_cloud(path);
  CHECK(again.points == back.points);
  if (cloud.has_normals()) CHECK(*again.normals == *back.normals);
}

}  // namespace

TEST_CASE("csv round-trip preserves float32 coordinates") {
  check_roundtrip(random_cloud(128, 1, false), temp_file("a.csv"));
  check_roundtrip(random_cloud(64, 2, true), temp_file("b.csv"));
}

TEST_CASE("ply round-trip preserves float32 coordinates") {
  check_roundtrip(random_cloud(128, 3, false), temp_file("a.ply"));
  check_roundtrip(random_cloud(64, 4, true), temp_file("b.ply"));
}

TEST_CASE("readers reject malformed input") {
  const auto bad_csv = temp_file("bad.csv");
  {
    std::ofstream out(bad_csv);
    out << "1,2\n";
  }
  CHECK_THROWS_AS(read_csv(bad_csv), ValidationError);

  const auto bad_ply = temp_file("bad.ply");
  {
    std::ofstream out(bad_ply);
    out << "not a ply\n";
  }
  CHECK_THROWS_AS(read_ply(bad_ply), ValidationError);

  CHECK_THROWS_AS(read_cloud(temp_file("missing.csv")), ValidationError);
  CHECK_THROWS_AS(read_cloud(temp_file("cloud.xyz")), ValidationError);
}

TEST_CASE("reader rejects non-finite coordinates") {
  const auto path = temp_file("nan.csv");
  {
    std::ofstream out(path);
    out << "1,2,3\nnan,0,0\n";
  }
  CHECK_THROWS_AS(read_csv(path), ValidationError);
}
