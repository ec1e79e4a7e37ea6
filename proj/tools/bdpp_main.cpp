#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "bdpp/analysis.hpp"
#include "bdpp/bilevel.hpp"
#include "bdpp/config.hpp"
#include "bdpp/report.hpp"
#include "bdpp/trajectory_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

int run_search(const std::string& config_path, const std::string& out_override) {
  bdpp::RunConfig cfg = bdpp::load_config(config_path);
  if (!out_override.empty()) cfg.trajectory_path = out_override;
  if (const char* env = std::getenv("BDPP_SEED"))
    cfg.search.seed = std::strtoull(env, nullptr, 10);

  const bdpp::Dataset data = bdpp::generate_task(cfg.task);
  const bdpp::OpSet ops = bdpp::OpSet::canonical();
  bdpp::SupernetConfig scfg;
  scfg.input_dim = cfg.task.dim;
  scfg.width = cfg.search.proxy.channels;
  scfg.depth = cfg.search.proxy.layers;
  scfg.num_classes = cfg.task.num_classes;
  bdpp::Rng init_rng(cfg.search.seed ^ 0x517cc1b727220a95ULL);
  bdpp::Supernet net = bdpp::Supernet::init(scfg, ops, init_rng);
  bdpp::ArchParams arch = bdpp::ArchParams::zeros(bdpp::kNumEdges, ops.size());

  std::optional<bdpp::TabularBenchmark> bench;
  if (cfg.benchmark.mode == bdpp::BenchmarkRef::Mode::Generated)
    bench = bdpp::TabularBenchmark::generate(cfg.benchmark.seed);
  else if (cfg.benchmark.mode == bdpp::BenchmarkRef::Mode::Imported)
    bench = bdpp::TabularBenchmark::load_csv(cfg.benchmark.path);

  const auto result = bdpp::search(cfg.search, net, arch, data,
                                   bench ? &*bench : nullptr);
  bdpp::save_trajectory(cfg.trajectory_path, result.trajectory, bdpp::kNumEdges);

  std::cout << result.final_genotype_str << "\n";
  if (bench) {
    const auto [best_geno, best_score] = bench->best();
    std::cout << "score " << bench->evaluate(result.final_genotype_str) << "\n";
    std::cout << "optimal " << best_geno << " " << best_score << "\n";
  }
  return kExitOk;
}

int run_verify(const std::string& suite) {
  std::vector<bdpp::SuiteResult> results;
  if (suite == "beta-grad") results = bdpp::verify_beta_grad();
  else if (suite == "theta") results = bdpp::verify_theta();
  else if (suite == "flooding") results = bdpp::verify_flooding();
  else if (suite == "criteria") results = bdpp::verify_criteria();
  else if (suite == "lipschitz") results = bdpp::verify_lipschitz();
  else if (suite == "all") results = bdpp::verify_all();
  else {
    std::cerr << "unknown suite '" << suite
              << "' (expected beta-grad|theta|flooding|criteria|lipschitz|all)\n";
    return kExitUsage;
  }
  bool all_ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS" : "FAIL") << "  " << r.name;
    if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
    std::cout << "\n";
    all_ok = all_ok && r.passed;
  }
  return all_ok ? kExitOk : kExitPropertyFailure;
}

int run_bench_gen(std::uint64_t seed, const std::string& out) {
  const auto bench = bdpp::TabularBenchmark::generate(seed);
  bench.save_csv(out);
  std::cout << "wrote " << bench.size() << " genotypes to " << out << "\n";
  return kExitOk;
}

int run_bench_best(const std::string& path) {
  const auto bench = bdpp::TabularBenchmark::load_csv(path);
  std::string best_geno;
  double best_score = -1e300;
  if (bench.complete()) {
    std::tie(best_geno, best_score) = bench.best();
  } else {
    // partial tables still admit a scan
    for (const auto& [key, score] : bench.entries())
      if (score > best_score || (score == best_score && key < best_geno)) {
        best_geno = key;
        best_score = score;
      }
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", best_score);
  std::cout << best_geno << " " << buf << "\n";
  return kExitOk;
}

int run_report(const std::string& traj_path, const std::string& bench_path,
               const std::string& out_path) {
  const auto traj = bdpp::load_trajectory(traj_path, bdpp::kNumEdges);
  std::optional<bdpp::TabularBenchmark> bench;
  if (!bench_path.empty()) bench = bdpp::TabularBenchmark::load_csv(bench_path);
  const std::string md = bdpp::make_report(traj, bench ? &*bench : nullptr);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw bdpp::IoError("report: cannot open '" + out_path + "'");
  out << md;
  if (!out) throw bdpp::IoError("report: write failure on '" + out_path + "'");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bdpp: bi-level regularized differentiable architecture search"};
  app.require_subcommand(1);

  std::string config_path, out_path, suite = "all";
  std::string bench_path, traj_path;
  std::uint64_t seed = 0;

  auto* cmd_search = app.add_subcommand("search", "run the bi-level search");
  cmd_search->add_option("--config", config_path, "JSON run config")->required();
  cmd_search->add_option("--out", out_path, "trajectory CSV path override");

  auto* cmd_verify = app.add_subcommand("verify", "run derivation property suites");
  cmd_verify->add_option("--suite", suite,
                         "beta-grad|theta|flooding|criteria|lipschitz|all");

  auto* cmd_bench = app.add_subcommand("bench", "tabular benchmark utilities");
  auto* bench_gen = cmd_bench->add_subcommand("gen", "generate a benchmark CSV");
  bench_gen->add_option("--seed", seed, "generation seed");
  bench_gen->add_option("--out", out_path, "output CSV path")->required();
  auto* bench_best = cmd_bench->add_subcommand("best", "print the argmax entry");
  bench_best->add_option("--bench", bench_path, "benchmark CSV path")->required();
  cmd_bench->require_subcommand(1);

  auto* cmd_report = app.add_subcommand("report", "render a markdown report");
  cmd_report->add_option("--traj", traj_path, "trajectory CSV")->required();
  cmd_report->add_option("--bench", bench_path, "optional benchmark CSV");
  cmd_report->add_option("--out", out_path, "output markdown path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (cmd_search->parsed()) return run_search(config_path, out_path);
    if (cmd_verify->parsed()) return run_verify(suite);
    if (cmd_bench->parsed()) {
      if (bench_gen->parsed()) return run_bench_gen(seed, out_path);
      return run_bench_best(bench_path);
    }
    if (cmd_report->parsed()) return run_report(traj_path, bench_path, out_path);
  } catch (const bdpp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const bdpp::CsvError& e) {
    std::cerr << "csv error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const bdpp::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPropertyFailure;
  }
  return kExitUsage;
}
