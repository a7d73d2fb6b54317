#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "icpattack/harness.hpp"
#include "icpattack/synthetic.hpp"

using namespace icpattack;

namespace {

PerturbationResult result_with_norms(const std::vector<double>& displacement_norms,
                                     double lambda) {
  PerturbationResult res;
  const auto n = static_cast<Eigen::Index>(displacement_norms.size());
  res.lambda = lambda;
  res.adversarial.points = PointMatrix::Zero(n, 3);
  res.displacements = PointMatrix::Zero(n, 3);
  for (Eigen::Index i = 0; i < n; ++i)
    res.displacements(i, 0) = displacement_norms[static_cast<std::size_t>(i)];
  return res;
}

std::vector<LocalizationPair> small_pairs(int count, std::uint64_t seed, double density = 60.0,
                                          Eigen::Index scan_points = 160) {
  const std::array<ShapeKind, 3> kinds = {ShapeKind::rectangle, ShapeKind::cross,
                                          ShapeKind::l_shape};
  std::vector<LocalizationPair> pairs;
  for (int i = 0; i < count; ++i) {
    const PointCloud map =
        generate_shape(kinds[static_cast<std::size_t>(i) % kinds.size()], density,
                       mix_seed(seed, static_cast<std::uint64_t>(i)));
    PairProfile profile = shapenet_pair_profile();
    profile.sample_count = scan_points;
    LocalizationPair pair = make_localization_pair(
        map, profile, mix_seed(seed + 1, static_cast<std::uint64_t>(i)));
    pair.id = "pair-" + std::to_string(i);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

AttackConfig quick_attack() {
  AttackConfig cfg;
  cfg.steps = 8;
  cfg.unroll.unroll_iterations = 8;
  cfg.unroll.icp = shapenet_icp_config();
  return cfg;
}

}  // namespace

TEST_CASE("planar_translation_error ignores the z component") {
  PoseError3d err;
  err.rho = Eigen::Vector3d(3.0, 4.0, 12.0);
  CHECK(planar_translation_error(err) == 5.0);
  CHECK(planar_translation_error(PoseError3d{}) == 0.0);
  err.rho = Eigen::Vector3d(0.07, 0.0, 0.0);
  CHECK(planar_translation_error(err) == doctest::Approx(0.07).epsilon(1e-15));
}

TEST_CASE("compute_allowance is zero when displacements respect the bound") {
  std::vector<PerturbationResult> results;
  results.push_back(result_with_norms({0.05, 0.08, 0.1}, 0.1));
  results.push_back(result_with_norms({0.0, 0.099}, 0.1));
  CHECK(compute_allowance(results) == 0.0);
}

TEST_CASE("compute_allowance matches an order-statistics oracle on uniform overshoots") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  const double lambda = 1.0;
  std::vector<double> overshoots(5000);
  std::vector<double> norms(5000);
  for (std::size_t i = 0; i < overshoots.size(); ++i) {
    overshoots[i] = u(rng);
    norms[i] = lambda + overshoots[i];
  }
  std::vector<PerturbationResult> results;
  results.push_back(result_with_norms(norms, lambda));

  // Independent oracle: sorted ranks with linear interpolation.
  std::vector<double> sorted = overshoots;
  std::sort(sorted.begin(), sorted.end());
  const double h = 0.997 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  const double expected = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);

  const double allowance = compute_allowance(results, 0.997);
  CHECK(allowance == doctest::Approx(expected).epsilon(1e-12));
  CHECK(allowance == doctest::Approx(0.2 * 0.997).epsilon(0.05));
}

TEST_CASE("compute_allowance validates inputs") {
  CHECK_THROWS_AS(compute_allowance({}, 0.997), ValidationError);
  std::vector<PerturbationResult> results;
  results.push_back(result_with_norms({0.2}, 0.1));
  CHECK_THROWS_AS(compute_allowance(results, 0.0), ValidationError);
  CHECK_THROWS_AS(compute_allowance(results, 1.5), ValidationError);
}

TEST_CASE("run_benchmark at lambda 0 reduces the attack row to the original row") {
  const auto pairs = small_pairs(1, 77);
  const BenchmarkTable table = run_benchmark(pairs, {0.0}, quick_attack(), 3);
  REQUIRE(table.rows.size() == 4);
  const BenchmarkRow& original = table.rows[0];
  const BenchmarkRow& attack = table.rows[3];
  CHECK(original.method == Method::original);
  CHECK(attack.method == Method::attack);
  CHECK(attack.mean_error == doctest::Approx(original.mean_error).epsilon(1e-12));
  CHECK(original.samples_used == 1);
  CHECK(original.samples_dropped == 0);
  for (const auto& row : table.rows) {
    if (row.pct_attack_larger) {
      CHECK(*row.pct_attack_larger >= 0.0);
      CHECK(*row.pct_attack_larger <= 1.0);
    }
  }
  CHECK_FALSE(attack.pct_attack_larger.has_value());
}

TEST_CASE("run_benchmark is reproducible across runs and worker counts") {
  const auto pairs = small_pairs(5, 101);
  const std::vector<double> lambdas = {0.06};
  const AttackConfig cfg = quick_attack();

  HarnessOptions serial;
  serial.workers = 1;
  HarnessOptions wide;
  wide.workers = 4;

  const std::string a = benchmark_table_to_json(run_benchmark(pairs, lambdas, cfg, 42, serial)).dump();
  const std::string b = benchmark_table_to_json(run_benchmark(pairs, lambdas, cfg, 42, serial)).dump();
  const std::string c = benchmark_table_to_json(run_benchmark(pairs, lambdas, cfg, 42, wide)).dump();
  CHECK(a == b);
  CHECK(a == c);

  const std::string other =
      benchmark_table_to_json(run_benchmark(pairs, lambdas, cfg, 43, serial)).dump();
  CHECK(a != other);
}

TEST_CASE("benchmark csv mirrors the method-by-lambda table") {
  const auto pairs = small_pairs(2, 131);
  const BenchmarkTable table = run_benchmark(pairs, {0.0, 0.05}, quick_attack(), 9);
  const auto path = std::filesystem::temp_directory_path() / "icpattack_bench.csv";
  write_benchmark_csv(path, table);

  std::ifstream in(path);
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header.find("mean_error_l0.05") != std::string::npos);
  CHECK(header.find("pct_attack_larger_l0") != std::string::npos);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0].rfind("original,", 0) == 0);
  CHECK(lines[1].rfind("uniform,", 0) == 0);
  CHECK(lines[2].rfind("normal,", 0) == 0);
  CHECK(lines[3].rfind("attack,", 0) == 0);
}

TEST_CASE("route_map reports per-location means with capping") {
  auto pairs = small_pairs(2, 151);
  pairs[0].location = Eigen::Vector2d(0.0, 0.0);
  pairs[1].location = Eigen::Vector2d(10.0, 0.0);

  AttackConfig cfg = quick_attack();
  cfg.lambda = 0.08;
  const RouteReport report = route_map(pairs, cfg, 6.0);
  REQUIRE(report.entries.size() == 2);
  for (const auto& entry : report.entries) {
    CHECK(entry.samples == 1);
    CHECK_FALSE(entry.cap_applied);
    CHECK(entry.worst_error == entry.raw_error);
    CHECK(entry.worst_error >= 0.0);
  }

  // A tiny cap forces the visual channel down while raw survives.
  const RouteReport capped = route_map(pairs, cfg, 1e-9);
  for (const auto& entry : capped.entries) {
    if (entry.raw_error > 1e-9) {
      CHECK(entry.cap_applied);
      CHECK(entry.worst_error == 1e-9);
      CHECK(entry.raw_error > entry.worst_error);
    }
  }
}

TEST_CASE("route_map requires locations") {
  auto pairs = small_pairs(1, 171);
  pairs[0].location.reset();
  CHECK_THROWS_AS(route_map(pairs, quick_attack(), 6.0), ValidationError);
}

TEST_CASE("mix_seed separates streams deterministically") {
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(1, 3));
  CHECK(mix_seed(1, 2) != mix_seed(2, 2));
}
