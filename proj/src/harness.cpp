#include "icpattack/harness.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "icpattack/errors.hpp"
#include "icpattack/parallel.hpp"
#include "icpattack/stats.hpp"

namespace icpattack {

double planar_translation_error(const PoseError3d& err) { return err.rho.head<2>().norm(); }

double compute_allowance(const std::vector<PerturbationResult>& attack_results,
                         double quantile_prob) {
  if (attack_results.empty()) throw ValidationError("compute_allowance: no attack results");
  if (!(quantile_prob > 0.0) || quantile_prob > 1.0)
    throw ValidationError("compute_allowance: quantile must be in (0, 1]");
  std::vector<double> overshoots;
  for (const auto& res : attack_results) {
    for (Eigen::Index i = 0; i < res.displacements.rows(); ++i) {
      const double ex = res.displacements.row(i).norm() - res.lambda;
      if (ex > 0.0) overshoots.push_back(ex);
    }
  }
  if (overshoots.empty()) return 0.0;
  return quantile(overshoots, quantile_prob);
}

std::string to_string(Method method) {
  switch (method) {
    case Method::original: return "original";
    case Method::uniform: return "uniform";
    case Method::normal: return "normal";
    case Method::attack: return "attack";
  }
  throw ValidationError("unknown method");
}

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

struct PairOutcome {
  bool dropped = false;
  double original = 0.0;
  double attack = 0.0;
  double uniform = 0.0;
  double normal = 0.0;
  PerturbationResult attack_result;
};

// Planar error of a perturbed scan under the full evaluation solver.
// Non-convergence or a numerical failure marks the pair dropped.
double evaluate_cloud(const PointCloud& cloud, const LocalizationPair& pair,
                      const IcpConfig& eval, bool* dropped) {
  try {
    const IcpResult res = run_icp(cloud, pair.map, eval);
    if (!res.converged) {
      *dropped = true;
      return 0.0;
    }
    return planar_translation_error(pose_error(res.estimate, pair.ground_truth));
  } catch (const NumericalError&) {
    *dropped = true;
    return 0.0;
  }
}

BenchmarkRow make_row(Method method, double lambda, const std::vector<double>& errors,
                      const std::vector<double>& attack_errors, int dropped) {
  BenchmarkRow row;
  row.method = method;
  row.lambda = lambda;
  row.samples_used = static_cast<int>(errors.size());
  row.samples_dropped = dropped;
  if (!errors.empty()) {
    row.mean_error = sample_mean(errors);
    row.std_error = sample_stddev(errors);
  }
  if (method != Method::attack) {
    int larger = 0;
    for (std::size_t i = 0; i < errors.size(); ++i)
      if (attack_errors[i] > errors[i]) ++larger;
    row.pct_attack_larger =
        errors.empty() ? 0.0 : static_cast<double>(larger) / static_cast<double>(errors.size());
  }
  return row;
}

}  // namespace

BenchmarkTable run_benchmark(const std::vector<LocalizationPair>& pairs,
                             const std::vector<double>& lambdas,
                             const AttackConfig& attack_config, std::uint64_t seed,
                             const HarnessOptions& options) {
  if (pairs.empty()) throw ValidationError("run_benchmark: no pairs");
  if (lambdas.empty()) throw ValidationError("run_benchmark: no lambdas");

  BenchmarkTable table;
  table.seed = seed;
  table.allowance_quantile = options.allowance_quantile;
  table.lambdas = lambdas;

  for (const double lambda : lambdas) {
    std::vector<PairOutcome> outcomes(pairs.size());

    // Phase 1: clean runs and the attack. Per-pair work owns its slot.
    parallel_for(pairs.size(), options.workers, [&](std::size_t i) {
      PairOutcome& out = outcomes[i];
      AttackConfig cfg = attack_config;
      cfg.lambda = lambda;
      cfg.seed = mix_seed(seed, i);
      try {
        const IcpResult clean = run_icp(pairs[i].scan, pairs[i].map, cfg.unroll.icp);
        if (!clean.converged) {
          out.dropped = true;
          return;
        }
        out.original = planar_translation_error(pose_error(clean.estimate, pairs[i].ground_truth));
        out.attack_result = optimize_perturbation(pairs[i], cfg);
        out.attack =
            evaluate_cloud(out.attack_result.adversarial, pairs[i], cfg.unroll.icp, &out.dropped);
      } catch (const NumericalError&) {
        out.dropped = true;
      }
    });

    // Allowance from the attacks that ran; baselines get lambda + allowance.
    std::vector<PerturbationResult> attack_results;
    for (const auto& out : outcomes)
      if (!out.dropped) attack_results.push_back(out.attack_result);
    if (attack_results.empty()) throw NumericalError("run_benchmark: every pair was dropped");
    const double allowance = compute_allowance(attack_results, options.allowance_quantile);
    table.allowances.push_back(allowance);
    const double lambda_baseline = lambda + allowance;

    // Phase 2: baselines at the widened bound.
    parallel_for(pairs.size(), options.workers, [&](std::size_t i) {
      PairOutcome& out = outcomes[i];
      if (out.dropped) return;
      const auto uniform_res =
          baseline_uniform(pairs[i].scan, lambda_baseline, mix_seed(seed, i) ^ 0x5ba5ba5ba5ULL);
      out.uniform =
          evaluate_cloud(uniform_res.adversarial, pairs[i], attack_config.unroll.icp, &out.dropped);
      if (out.dropped) return;
      const auto normal_res = baseline_normal(pairs[i].scan, lambda_baseline);
      out.normal =
          evaluate_cloud(normal_res.adversarial, pairs[i], attack_config.unroll.icp, &out.dropped);
    });

    // A pair dropped anywhere is dropped for every method.
    std::vector<double> original, uniform, normal, attack;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const PairOutcome& out = outcomes[i];
      PairDetail detail;
      detail.id = pairs[i].id;
      detail.lambda = lambda;
      detail.dropped = out.dropped;
      if (!out.dropped) {
        detail.original = out.original;
        detail.uniform = out.uniform;
        detail.normal = out.normal;
        detail.attack = out.attack;
        original.push_back(out.original);
        uniform.push_back(out.uniform);
        normal.push_back(out.normal);
        attack.push_back(out.attack);
      }
      table.details.push_back(std::move(detail));
    }
    const int dropped = static_cast<int>(pairs.size() - original.size());
    if (original.empty()) throw NumericalError("run_benchmark: every pair was dropped");

    table.rows.push_back(make_row(Method::original, lambda, original, attack, dropped));
    table.rows.push_back(make_row(Method::uniform, lambda, uniform, attack, dropped));
    table.rows.push_back(make_row(Method::normal, lambda, normal, attack, dropped));
    table.rows.push_back(make_row(Method::attack, lambda, attack, attack, dropped));
  }
  return table;
}

RouteReport route_map(const std::vector<LocalizationPair>& pairs, const AttackConfig& config,
                      double cap, const HarnessOptions& options) {
  if (!(cap > 0.0)) throw ValidationError("route_map: cap must be > 0");
  for (const auto& pair : pairs)
    if (!pair.location) throw ValidationError("route_map: pair " + pair.id + " has no location");

  // Induced planar error per pair. Worst-case reporting keeps
  // non-converged evaluations (their error is the point); only hard
  // numerical failures fall back to the clean error.
  std::vector<double> induced(pairs.size(), 0.0);
  std::vector<char> usable(pairs.size(), 1);
  parallel_for(pairs.size(), options.workers, [&](std::size_t i) {
    AttackConfig cfg = config;
    cfg.seed = mix_seed(config.seed, i);
    try {
      const PerturbationResult res = optimize_perturbation(pairs[i], cfg);
      try {
        const IcpResult eval = run_icp(res.adversarial, pairs[i].map, cfg.unroll.icp);
        induced[i] = planar_translation_error(pose_error(eval.estimate, pairs[i].ground_truth));
      } catch (const NumericalError&) {
        induced[i] =
            res.pose_error_after ? planar_translation_error(*res.pose_error_after) : 0.0;
      }
    } catch (const NumericalError&) {
      usable[i] = 0;  // clean ICP never converged here
    }
  });

  struct Bin {
    double sum = 0.0;
    int count = 0;
  };
  std::map<std::pair<long long, long long>, Bin> bins;
  const double bin_size = 1.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!usable[i]) continue;
    const Eigen::Vector2d loc = *pairs[i].location;
    const auto key = std::make_pair(std::llround(loc.x() / bin_size),
                                    std::llround(loc.y() / bin_size));
    bins[key].sum += induced[i];
    bins[key].count += 1;
  }

  RouteReport report;
  report.cap = cap;
  report.bin_size = bin_size;
  for (const auto& [key, bin] : bins) {
    RouteEntry entry;
    entry.location = Eigen::Vector2d(static_cast<double>(key.first) * bin_size,
                                     static_cast<double>(key.second) * bin_size);
    entry.raw_error = bin.sum / static_cast<double>(bin.count);
    entry.cap_applied = entry.raw_error > cap;
    entry.worst_error = entry.cap_applied ? cap : entry.raw_error;
    entry.samples = bin.count;
    report.entries.push_back(entry);
  }
  return report;
}

Json benchmark_table_to_json(const BenchmarkTable& table) {
  Json j;
  j["seed"] = table.seed;
  j["allowance_quantile"] = table.allowance_quantile;
  j["lambdas"] = table.lambdas;
  j["allowances"] = table.allowances;
  Json rows = Json::array();
  for (const auto& row : table.rows) {
    Json r;
    r["method"] = to_string(row.method);
    r["lambda"] = row.lambda;
    r["mean_error"] = row.mean_error;
    r["std_error"] = row.std_error;
    r["pct_attack_larger"] =
        row.pct_attack_larger ? Json(*row.pct_attack_larger) : Json(nullptr);
    r["samples_used"] = row.samples_used;
    r["samples_dropped"] = row.samples_dropped;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  Json details = Json::array();
  for (const auto& d : table.details) {
    Json rec;
    rec["id"] = d.id;
    rec["lambda"] = d.lambda;
    rec["dropped"] = d.dropped;
    if (!d.dropped) {
      rec["original"] = d.original;
      rec["uniform"] = d.uniform;
      rec["normal"] = d.normal;
      rec["attack"] = d.attack;
    }
    details.push_back(std::move(rec));
  }
  j["details"] = std::move(details);
  return j;
}

void write_benchmark_csv(const std::filesystem::path& path, const BenchmarkTable& table) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());

  out << "method";
  for (const double l : table.lambdas)
    out << ",mean_error_l" << l << ",std_error_l" << l << ",pct_attack_larger_l" << l;
  out << "\n";

  for (const Method method : {Method::original, Method::uniform, Method::normal, Method::attack}) {
    out << to_string(method);
    for (const double lambda : table.lambdas) {
      const BenchmarkRow* found = nullptr;
      for (const auto& row : table.rows)
        if (row.method == method && row.lambda == lambda) found = &row;
      if (!found) throw ValidationError("write_benchmark_csv: incomplete table");
      out << "," << found->mean_error << "," << found->std_error << ",";
      if (found->pct_attack_larger) out << *found->pct_attack_larger;
    }
    out << "\n";
  }
}

Json route_report_to_json(const RouteReport& report) {
  Json j;
  j["cap"] = report.cap;
  j["bin_size"] = report.bin_size;
  Json entries = Json::array();
  for (const auto& e : report.entries) {
    Json entry;
    entry["location"] = Json::array({e.location.x(), e.location.y()});
    entry["worst_error"] = e.worst_error;
    entry["raw_error"] = e.raw_error;
    entry["cap_applied"] = e.cap_applied;
    entry["samples"] = e.samples;
    entries.push_back(std::move(entry));
  }
  j["entries"] = std::move(entries);
  return j;
}

}  // namespace icpattack
