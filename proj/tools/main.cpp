#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "icpattack/cloud_io.hpp"
#include "icpattack/harness.hpp"
#include "icpattack/manifest.hpp"
#include "icpattack/parallel.hpp"
#include "icpattack/serialization.hpp"
#include "icpattack/synthetic.hpp"

namespace fs = std::filesystem;
using namespace icpattack;

namespace {

LossWeights parse_weights(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  if (values.size() != 6)
    throw ValidationError("--w expects six comma-separated weights, got " + csv);
  LossWeights w;
  for (int i = 0; i < 6; ++i) w(i) = values[static_cast<std::size_t>(i)];
  return w;
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

/// X_adv as PLY with the per-point displacement in the normal slot, for
/// plotting displacement fields.
void write_adversarial_ply(const fs::path& path, const PerturbationResult& result) {
  PointCloud cloud = result.adversarial;
  cloud.normals = result.displacements;
  write_ply(path, cloud);
}

std::vector<LocalizationPair> load_pairs_or_fail(const fs::path& manifest_path) {
  std::vector<ManifestEntryError> errors;
  auto pairs = load_manifest(manifest_path, &errors);
  for (const auto& e : errors)
    std::cerr << "warning: skipping entry " << e.id << ": " << e.message << "\n";
  if (pairs.empty()) throw ValidationError("no loadable entries in " + manifest_path.string());
  return pairs;
}

struct AttackCliOptions {
  double lambda = 0.1;
  double alpha = 1.0;
  double beta = 10.0;
  std::string weights = "1,1,0,0,0,0";
  int steps = 50;
  int unroll = 25;
  std::uint64_t seed = 0;
  std::string profile;  ///< empty: use the manifest's profile
  int workers = 0;
};

AttackConfig build_attack_config(const AttackCliOptions& opt, const std::string& manifest_profile) {
  AttackConfig cfg;
  cfg.lambda = opt.lambda;
  cfg.alpha = opt.alpha;
  cfg.beta = opt.beta;
  cfg.w = parse_weights(opt.weights);
  cfg.steps = opt.steps;
  cfg.seed = opt.seed;
  cfg.unroll.unroll_iterations = opt.unroll;
  cfg.unroll.icp = icp_config_profile(opt.profile.empty() ? manifest_profile : opt.profile);
  return cfg;
}

int run_gen_data(const std::string& kind, int count, const std::string& profile_name,
                 std::uint64_t seed, const fs::path& out_dir, double density, bool locations,
                 Eigen::Index scan_points) {
  const ShapeKind shape = shape_kind_from_string(kind);
  PairProfile profile = pair_profile(profile_name);
  if (scan_points > 0) profile.sample_count = scan_points;
  std::vector<LocalizationPair> pairs;
  for (int i = 0; i < count; ++i) {
    const auto stream = static_cast<std::uint64_t>(i);
    const PointCloud map = generate_shape(shape, density, mix_seed(seed, 2 * stream));
    LocalizationPair pair = make_localization_pair(map, profile, mix_seed(seed, 2 * stream + 1));
    pair.id = std::to_string(i);
    if (locations) pair.location = Eigen::Vector2d(10.0 * static_cast<double>(i), 0.0);
    pairs.push_back(std::move(pair));
  }
  save_dataset(out_dir, pairs, profile.name, profile.name == "boreas" ? "m" : "normalized");
  std::cout << "wrote " << count << " pairs to " << out_dir.string() << "\n";
  return 0;
}

int run_icp_cmd(const fs::path& pair_file, const std::string& profile, int max_iters, double tol) {
  const LocalizationPair pair = load_pair_file(pair_file);
  IcpConfig config = icp_config_profile(profile);
  if (max_iters >= 0) config.max_iterations = max_iters;
  if (tol > 0.0) config.tolerance = tol;
  const IcpResult result = run_icp(pair.scan, pair.map, config);
  Json j = icp_result_to_json(result);
  j["pose_error"] = pose_error_to_json(pose_error(result.estimate, pair.ground_truth));
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_attack_cmd(const fs::path& manifest_path, const AttackCliOptions& opt,
                   const fs::path& out_dir) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  const auto pairs = load_pairs_or_fail(manifest_path);
  const AttackConfig base = build_attack_config(opt, manifest.profile);
  fs::create_directories(out_dir);

  Json summary;
  summary["lambda"] = opt.lambda;
  Json skipped = Json::array();
  Json written = Json::array();
  std::vector<Json> reports(pairs.size());
  std::vector<char> ok(pairs.size(), 0);

  parallel_for(pairs.size(), opt.workers, [&](std::size_t i) {
    AttackConfig cfg = base;
    cfg.seed = mix_seed(opt.seed, i);
    try {
      const PerturbationResult result = optimize_perturbation(pairs[i], cfg);
      Json j = perturbation_result_to_json(result);
      j["id"] = pairs[i].id;
      reports[i] = std::move(j);
      write_adversarial_ply(out_dir / ("adv_" + pairs[i].id + ".ply"), result);
      ok[i] = 1;
    } catch (const IcpNotConvergedError&) {
      ok[i] = 0;
    }
  });

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (ok[i]) {
      write_json(out_dir / ("attack_" + pairs[i].id + ".json"), reports[i]);
      written.push_back(pairs[i].id);
    } else {
      skipped.push_back(pairs[i].id);
    }
  }
  summary["written"] = std::move(written);
  summary["skipped_not_converged"] = std::move(skipped);
  write_json(out_dir / "summary.json", summary);
  std::cout << "attacked " << pairs.size() << " pairs; results in " << out_dir.string() << "\n";
  return 0;
}

int run_baseline_cmd(const std::string& method, const fs::path& manifest_path, double lambda,
                     std::uint64_t seed, const fs::path& out_dir) {
  if (method != "uniform" && method != "normal")
    throw ValidationError("--method must be uniform or normal");
  const auto pairs = load_pairs_or_fail(manifest_path);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PerturbationResult result =
        method == "uniform" ? baseline_uniform(pairs[i].scan, lambda, mix_seed(seed, i))
                            : baseline_normal(pairs[i].scan, lambda);
    Json j = perturbation_result_to_json(result);
    j["id"] = pairs[i].id;
    j["method"] = method;
    write_json(out_dir / (method + "_" + pairs[i].id + ".json"), j);
    write_adversarial_ply(out_dir / (method + "_adv_" + pairs[i].id + ".ply"), result);
  }
  std::cout << "wrote " << method << " baseline for " << pairs.size() << " pairs to "
            << out_dir.string() << "\n";
  return 0;
}

int run_bench_cmd(const fs::path& manifest_path, const std::vector<double>& lambdas,
                  const AttackCliOptions& opt, double allowance_q, const fs::path& out_path) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  const auto pairs = load_pairs_or_fail(manifest_path);
  const AttackConfig cfg = build_attack_config(opt, manifest.profile);
  HarnessOptions options;
  options.workers = opt.workers;
  options.allowance_quantile = allowance_q;
  const BenchmarkTable table = run_benchmark(pairs, lambdas, cfg, opt.seed, options);
  write_json(out_path, benchmark_table_to_json(table));
  fs::path csv_path = out_path;
  csv_path.replace_extension(".csv");
  write_benchmark_csv(csv_path, table);
  std::cout << "wrote " << out_path.string() << " and " << csv_path.string() << "\n";
  return 0;
}

int run_route_map_cmd(const fs::path& manifest_path, const AttackCliOptions& opt, double cap,
                      const fs::path& out_path) {
  const DatasetManifest manifest = read_manifest(manifest_path);
  const auto pairs = load_pairs_or_fail(manifest_path);
  AttackConfig cfg = build_attack_config(opt, manifest.profile);
  cfg.seed = opt.seed;
  HarnessOptions options;
  options.workers = opt.workers;
  const RouteReport report = route_map(pairs, cfg, cap, options);
  write_json(out_path, route_report_to_json(report));
  std::cout << "wrote " << out_path.string() << "\n";
  return 0;
}

int run_grad_check_cmd(const fs::path& pair_file, int samples, const std::string& profile,
                       int unroll, double fd_eps, const std::string& weights) {
  const LocalizationPair pair = load_pair_file(pair_file);
  GradientConfig config;
  config.icp = icp_config_profile(profile);
  config.unroll_iterations = unroll;
  if (fd_eps > 0.0) config.fd_epsilon = fd_eps;
  const GradientCheckReport report = finite_difference_check(
      pair.scan, pair.map, config, pair.ground_truth, parse_weights(weights), samples);
  std::cout << gradient_check_report_to_json(report).dump(2) << "\n";
  return report.pass_fraction >= 0.95 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worst-case ICP pose-error toolkit"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate synthetic localization pairs");
  std::string gen_kind = "rectangle";
  int gen_count = 10;
  std::string gen_profile = "shapenet";
  std::uint64_t gen_seed = 0;
  std::string gen_out = "data";
  double gen_density = 400.0;
  bool gen_locations = false;
  Eigen::Index gen_scan_points = -1;
  gen->add_option("--kind", gen_kind, "rectangle|l-shape|cross|ring|room-with-alcoves")
      ->required();
  gen->add_option("--count", gen_count)->required();
  gen->add_option("--profile", gen_profile, "shapenet|boreas")->required();
  gen->add_option("--seed", gen_seed)->required();
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--density", gen_density, "boundary points per unit length");
  gen->add_flag("--locations", gen_locations, "assign route locations 10 m apart");
  gen->add_option("--scan-points", gen_scan_points, "override the profile's scan size");

  // icp
  auto* icp_cmd = app.add_subcommand("icp", "Localize one pair, print the result as JSON");
  std::string icp_pair, icp_profile;
  int icp_max_iters = -1;
  double icp_tol = -1.0;
  icp_cmd->add_option("--pair", icp_pair, "pair JSON file")->required();
  icp_cmd->add_option("--profile", icp_profile, "shapenet|boreas")->required();
  icp_cmd->add_option("--max-iters", icp_max_iters);
  icp_cmd->add_option("--tol", icp_tol);

  // shared attack options
  AttackCliOptions opt;
  std::string manifest_file, out_arg;

  auto add_attack_options = [&](CLI::App* cmd, bool with_loss) {
    cmd->add_option("--steps", opt.steps);
    cmd->add_option("--unroll", opt.unroll, "unrolled ICP iterations (K)");
    cmd->add_option("--seed", opt.seed);
    cmd->add_option("--profile", opt.profile, "override the manifest profile");
    cmd->add_option("--workers", opt.workers, "worker threads (0 = auto)");
    if (with_loss) {
      cmd->add_option("--alpha", opt.alpha);
      cmd->add_option("--beta", opt.beta);
      cmd->add_option("--w", opt.weights, "six comma-separated loss weights");
    }
  };

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "Optimize worst-case perturbations");
  attack_cmd->add_option("--manifest", manifest_file)->required();
  attack_cmd->add_option("--lambda", opt.lambda)->required();
  attack_cmd->add_option("--alpha", opt.alpha)->required();
  attack_cmd->add_option("--beta", opt.beta)->required();
  attack_cmd->add_option("--w", opt.weights, "six comma-separated loss weights")->required();
  attack_cmd->add_option("--steps", opt.steps)->required();
  attack_cmd->add_option("--out", out_arg)->required();
  attack_cmd->add_option("--unroll", opt.unroll);
  attack_cmd->add_option("--seed", opt.seed);
  attack_cmd->add_option("--profile", opt.profile);
  attack_cmd->add_option("--workers", opt.workers);

  // baseline
  auto* baseline_cmd = app.add_subcommand("baseline", "Run a heuristic corruption baseline");
  std::string baseline_method;
  baseline_cmd->add_option("--method", baseline_method, "uniform|normal")->required();
  baseline_cmd->add_option("--manifest", manifest_file)->required();
  baseline_cmd->add_option("--lambda", opt.lambda)->required();
  baseline_cmd->add_option("--seed", opt.seed)->required();
  baseline_cmd->add_option("--out", out_arg)->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Method comparison across bounds");
  std::string lambdas_csv;
  double allowance_q = 0.997;
  bench_cmd->add_option("--manifest", manifest_file)->required();
  bench_cmd->add_option("--lambdas", lambdas_csv, "comma-separated bounds")->required();
  bench_cmd->add_option("--out", out_arg, "table JSON path (CSV written alongside)")->required();
  bench_cmd->add_option("--allowance-quantile", allowance_q);
  add_attack_options(bench_cmd, true);

  // route-map
  auto* route_cmd = app.add_subcommand("route-map", "Worst-case error over a route");
  double route_cap = 6.0;
  route_cmd->add_option("--manifest", manifest_file)->required();
  route_cmd->add_option("--lambda", opt.lambda)->required();
  route_cmd->add_option("--cap", route_cap)->required();
  route_cmd->add_option("--out", out_arg)->required();
  add_attack_options(route_cmd, true);

  // grad-check
  auto* grad_cmd = app.add_subcommand("grad-check", "Finite-difference gradient check");
  std::string grad_pair;
  int grad_samples = 50;
  std::string grad_profile = "shapenet";
  int grad_unroll = 8;
  double grad_fd_eps = -1.0;
  std::string grad_weights = "1,1,0,0,0,0";
  grad_cmd->add_option("--pair", grad_pair)->required();
  grad_cmd->add_option("--samples", grad_samples)->required();
  grad_cmd->add_option("--profile", grad_profile);
  grad_cmd->add_option("--unroll", grad_unroll);
  grad_cmd->add_option("--fd-eps", grad_fd_eps);
  grad_cmd->add_option("--w", grad_weights);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed())
      return run_gen_data(gen_kind, gen_count, gen_profile, gen_seed, gen_out, gen_density,
                          gen_locations, gen_scan_points);
    if (icp_cmd->parsed()) return run_icp_cmd(icp_pair, icp_profile, icp_max_iters, icp_tol);
    if (attack_cmd->parsed()) return run_attack_cmd(manifest_file, opt, out_arg);
    if (baseline_cmd->parsed())
      return run_baseline_cmd(baseline_method, manifest_file, opt.lambda, opt.seed, out_arg);
    if (bench_cmd->parsed()) {
      std::vector<double> lambdas;
      std::stringstream ss(lambdas_csv);
      std::string item;
      while (std::getline(ss, item, ',')) lambdas.push_back(std::stod(item));
      return run_bench_cmd(manifest_file, lambdas, opt, allowance_q, out_arg);
    }
    if (route_cmd->parsed()) return run_route_map_cmd(manifest_file, opt, route_cap, out_arg);
    if (grad_cmd->parsed())
      return run_grad_check_cmd(grad_pair, grad_samples, grad_profile, grad_unroll, grad_fd_eps,
                                grad_weights);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
