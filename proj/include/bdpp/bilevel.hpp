#pragma once
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bdpp/oracle.hpp"
#include "bdpp/regularizers.hpp"
#include "bdpp/searchspace.hpp"

namespace bdpp {

struct ProxyConfig {
  double data_fraction = 1.0;
  std::size_t channels = 8;
  std::size_t layers = 3;
  int max_epochs = 50;
};

enum class StopCriterion { None, C1, C2, C3 };

struct SearchConfig {
  double eta_alpha = 0.05;
  double eta_w = 0.1;
  std::size_t batch_size = 16;
  AlphaRegularizer alpha_reg;
  WeightRegularizer weight_reg;
  ProxyConfig proxy;
  double split_fraction_w = 0.5;
  StopCriterion early_stop = StopCriterion::None;
  std::uint64_t seed = 0;
  int plateau_window = 5;
  double plateau_tol = 1e-3;
};

struct EarlyStopState {
  std::vector<std::vector<double>> std_history;  // per edge
  std::vector<bool> determined;
  int window = 5;
  double tol = 1e-3;

  static EarlyStopState init(std::size_t num_edges, int window, double tol);
  int m() const;
};

// Which of criteria {1,2,3} hold for m determined edges out of M.
std::set<int> criteria_fired(int m, int M);

// Marks an edge determined once its std has grown by less than tol over the
// last `window` epochs; returns the criteria satisfied after the update.
std::set<int> update_early_stop(EarlyStopState& state,
                                const std::vector<double>& edge_stds);

struct TrajectoryRecord {
  int epoch = 0;
  double l_train = 0.0, l_val = 0.0, l_beta = 0.0;
  int m = 0;
  std::string genotype;
  std::optional<double> oracle_score;
  std::vector<double> edge_mean, edge_median, edge_std;
};

struct FloodStep {
  int epoch;
  double loss;   // raw training loss before the flooding transform
  bool ascent;
};

struct SearchResult {
  std::vector<TrajectoryRecord> trajectory;
  Genotype final_genotype;
  std::string final_genotype_str;
  std::vector<FloodStep> flood_log;
  int epochs_run = 0;
  bool stopped_early = false;
};

// Seeded subsample of data_fraction * N indices, split disjointly into the
// w partition and the alpha partition.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition_data(
    std::size_t n, double data_fraction, double split_fraction_w,
    std::uint64_t seed);

// Alternating first-order bi-level search (one alpha pass and one w pass per
// epoch). BDPP_SEED in the environment overrides config.seed.
SearchResult search(const SearchConfig& config, Supernet& net, ArchParams& arch,
                    const Dataset& data, const TabularBenchmark* oracle = nullptr);

}  // namespace bdpp
