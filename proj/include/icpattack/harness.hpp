#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "icpattack/attack.hpp"
#include "icpattack/localization_pair.hpp"
#include "icpattack/serialization.hpp"

namespace icpattack {

/// Lateral/longitudinal error magnitude: sqrt(rho_x^2 + rho_y^2).
double planar_translation_error(const PoseError3d& err);

/// High quantile (default 0.997) of the positive per-point overshoots
/// max(|d_i| - lambda, 0) pooled over all results; 0 when nothing
/// overshoots. Baselines run at lambda + this allowance.
double compute_allowance(const std::vector<PerturbationResult>& attack_results,
                         double quantile_prob = 0.997);

enum class Method { original, uniform, normal, attack };
std::string to_string(Method method);

struct BenchmarkRow {
  Method method;
  double lambda;
  double mean_error = 0.0;
  double std_error = 0.0;
  /// Share of surviving pairs where the attack's error exceeds this
  /// method's; unset on the attack's own row.
  std::optional<double> pct_attack_larger;
  int samples_used = 0;
  int samples_dropped = 0;
};

/// Per-pair planar errors behind one lambda's rows (dropped pairs carry
/// no errors but stay listed).
struct PairDetail {
  std::string id;
  double lambda = 0.0;
  bool dropped = false;
  double original = 0.0;
  double uniform = 0.0;
  double normal = 0.0;
  double attack = 0.0;
};

struct BenchmarkTable {
  std::uint64_t seed = 0;
  double allowance_quantile = 0.997;
  std::vector<double> lambdas;
  std::vector<double> allowances;  ///< one per lambda
  std::vector<BenchmarkRow> rows;  ///< original, uniform, normal, attack per lambda
  std::vector<PairDetail> details;
};

struct HarnessOptions {
  int workers = 0;  ///< 0 = auto; results do not depend on this
  double allowance_quantile = 0.997;
};

/// Full method comparison across perturbation bounds. Per lambda: attack
/// every pair, grant the baselines lambda + allowance, evaluate each
/// method with the full solver, and drop a pair for every method when any
/// method's solve fails to converge on it.
BenchmarkTable run_benchmark(const std::vector<LocalizationPair>& pairs,
                             const std::vector<double>& lambdas,
                             const AttackConfig& attack_config, std::uint64_t seed,
                             const HarnessOptions& options = {});

struct RouteEntry {
  Eigen::Vector2d location;  ///< bin center
  double worst_error = 0.0;  ///< capped value for the visual channel
  double raw_error = 0.0;
  bool cap_applied = false;
  int samples = 0;
};

struct RouteReport {
  double cap = 0.0;
  double bin_size = 1.0;
  std::vector<RouteEntry> entries;  ///< sorted by bin coordinates
};

/// Worst-case error per route location: attack every pair, average the
/// induced planar error within 1 m location bins, cap for display while
/// keeping the raw value.
RouteReport route_map(const std::vector<LocalizationPair>& pairs, const AttackConfig& config,
                      double cap, const HarnessOptions& options = {});

Json benchmark_table_to_json(const BenchmarkTable& table);
/// CSV with one method per row and mean/std/%-attack-larger columns per
/// lambda, mirroring the benchmark table layout.
void write_benchmark_csv(const std::filesystem::path& path, const BenchmarkTable& table);
Json route_report_to_json(const RouteReport& report);

/// Deterministic per-stream seed derivation (splitmix64 step).
std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream);

}  // namespace icpattack
