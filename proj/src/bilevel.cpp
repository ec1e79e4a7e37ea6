#include "bdpp/bilevel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "bdpp/analysis.hpp"

namespace bdpp {

EarlyStopState EarlyStopState::init(std::size_t num_edges, int window, double tol) {
  EarlyStopState s;
  s.std_history.resize(num_edges);
  s.determined.assign(num_edges, false);
  s.window = window;
  s.tol = tol;
  return s;
}

int EarlyStopState::m() const {
  return static_cast<int>(std::count(determined.begin(), determined.end(), true));
}

std::set<int> criteria_fired(int m, int M) {
  std::set<int> fired;
  if (m >= 1) fired.insert(1);
  if (2 * m >= M) fired.insert(2);
  if (m == M) fired.insert(3);
  return fired;
}

std::set<int> update_early_stop(EarlyStopState& state,
                                const std::vector<double>& edge_stds) {
  const std::size_t E = state.std_history.size();
  if (edge_stds.size() != E)
    throw std::invalid_argument("early_stop: wrong number of edge stds");
  for (std::size_t e = 0; e < E; ++e) {
    if (!std::isfinite(edge_stds[e]))
      throw std::invalid_argument("early_stop: non-finite std");
    auto& hist = state.std_history[e];
    hist.push_back(edge_stds[e]);
    if (!state.determined[e] &&
        hist.size() > static_cast<std::size_t>(state.window)) {
      const double growth = hist.back() - hist[hist.size() - 1 -
                                               static_cast<std::size_t>(state.window)];
      if (growth < state.tol) state.determined[e] = true;
    }
  }
  return criteria_fired(state.m(), static_cast<int>(E));
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition_data(
    std::size_t n, double data_fraction, double split_fraction_w,
    std::uint64_t seed) {
  if (!(data_fraction > 0.0 && data_fraction <= 1.0))
    throw std::invalid_argument("partition: data_fraction must be in (0,1]");
  if (!(split_fraction_w > 0.0 && split_fraction_w < 1.0))
    throw std::invalid_argument("partition: split_fraction_w must be in (0,1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed ^ 0xa2c5b3f09d7e4611ULL);
  rng.shuffle(idx);
  const std::size_t total =
      static_cast<std::size_t>(std::llround(data_fraction * static_cast<double>(n)));
  const std::size_t w_count =
      static_cast<std::size_t>(std::llround(split_fraction_w * static_cast<double>(total)));
  if (total < 2 || w_count == 0 || w_count == total)
    throw std::invalid_argument(
        "partition: empty partition; increase data_fraction (need at least one "
        "sample on each side of the split)");
  std::vector<std::size_t> w_set(idx.begin(), idx.begin() + static_cast<long>(w_count));
  std::vector<std::size_t> a_set(idx.begin() + static_cast<long>(w_count),
                                 idx.begin() + static_cast<long>(total));
  return {w_set, a_set};
}

namespace {

Tensor gather_x(const Dataset& d, const std::vector<std::size_t>& idx,
                std::size_t lo, std::size_t hi) {
  const std::size_t dim = d.x.cols();
  Tensor out = Tensor::zeros({hi - lo, dim});
  for (std::size_t i = lo; i < hi; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      out.at(i - lo, j) = d.x.at(idx[i], j);
  return out;
}

std::vector<int> gather_y(const Dataset& d, const std::vector<std::size_t>& idx,
                          std::size_t lo, std::size_t hi) {
  std::vector<int> out(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) out[i - lo] = d.y[idx[i]];
  return out;
}

double beta_decay_value(const Tensor& alpha) {
  Graph g;
  const int a = g.leaf(alpha, LeafKind::Const);
  return g.value(beta_decay_loss(g, a)).data[0];
}

}  // namespace

SearchResult search(const SearchConfig& config, Supernet& net, ArchParams& arch,
                    const Dataset& data, const TabularBenchmark* oracle) {
  SearchConfig cfg = config;
  if (const char* env = std::getenv("BDPP_SEED"))
    cfg.seed = std::strtoull(env, nullptr, 10);
  if (!(cfg.eta_alpha > 0.0) || !(cfg.eta_w > 0.0))
    throw std::invalid_argument("search: learning rates must be > 0");

  auto [w_set, a_set] = partition_data(data.size(), cfg.proxy.data_fraction,
                                       cfg.split_fraction_w, cfg.seed);
  Rng rng(cfg.seed);
  const std::size_t E = arch.alpha.rows();
  EarlyStopState stop =
      EarlyStopState::init(E, cfg.plateau_window, cfg.plateau_tol);
  SearchResult res;
  const bool flooding = cfg.weight_reg.variant == WeightRegVariant::Flooding;
  const bool smoothing = cfg.weight_reg.variant == WeightRegVariant::RandomSmoothing;
  const bool w_l2 = cfg.weight_reg.variant == WeightRegVariant::L2 ||
                    cfg.weight_reg.variant == WeightRegVariant::LargerL2;

  for (int epoch = 0; epoch < cfg.proxy.max_epochs; ++epoch) {
    const double lambda = cfg.alpha_reg.schedule.at(epoch);

    // alpha phase on the validation partition
    rng.shuffle(a_set);
    double l_val_sum = 0.0;
    std::size_t val_batches = 0;
    for (std::size_t lo = 0; lo < a_set.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(lo + cfg.batch_size, a_set.size());
      Graph g;
      auto sg = supernet_forward(g, net, arch, gather_x(data, a_set, lo, hi));
      const int l_val = g.cross_entropy(sg.logits, gather_y(data, a_set, lo, hi));
      int total = l_val;
      if (cfg.alpha_reg.is_loss_term())
        total = g.add(l_val, g.scalar_mul(lambda,
                                          alpha_reg_loss(g, sg.alpha_leaf,
                                                         cfg.alpha_reg.variant)));
      g.backward(total);
      l_val_sum += g.value(l_val).data[0];
      ++val_batches;
      if (cfg.alpha_reg.is_loss_term() ||
          cfg.alpha_reg.variant == AlphaRegVariant::None) {
        const Tensor& ga = g.grad(sg.alpha_leaf);
        for (std::size_t i = 0; i < arch.alpha.size(); ++i)
          arch.alpha.data[i] -= cfg.eta_alpha * ga.data[i];
      } else {
        arch.alpha = alpha_penalty_step(arch.alpha, cfg.alpha_reg.variant,
                                        lambda, cfg.eta_alpha, g.grad(sg.alpha_leaf));
      }
    }

    // w phase on the training partition
    rng.shuffle(w_set);
    double l_train_sum = 0.0;
    std::size_t train_batches = 0;
    for (std::size_t lo = 0; lo < w_set.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(lo + cfg.batch_size, w_set.size());
      ArchParams arch_eff = arch;
      if (smoothing)
        arch_eff.alpha =
            smoothed_alpha(arch.alpha, cfg.weight_reg.coefficient, rng);
      Graph g;
      auto sg = supernet_forward(g, net, arch_eff, gather_x(data, w_set, lo, hi));
      const int l_train = g.cross_entropy(sg.logits, gather_y(data, w_set, lo, hi));
      int sumsq = -1;
      if (w_l2 && cfg.weight_reg.coefficient > 0.0) {
        for (const auto& [ptr, leaf] : sg.weight_leaves) {
          const int s = g.sum_squares(leaf);
          sumsq = sumsq < 0 ? s : g.add(sumsq, s);
        }
      }
      const int eff = apply_weight_regularizer(g, l_train, cfg.weight_reg.variant,
                                               cfg.weight_reg.coefficient, sumsq);
      g.backward(eff);
      const double raw = g.value(l_train).data[0];
      l_train_sum += raw;
      ++train_batches;
      if (flooding)
        res.flood_log.push_back({epoch, raw, raw < cfg.weight_reg.coefficient});
      for (const auto& [ptr, leaf] : sg.weight_leaves) {
        const Tensor& gw = g.grad(leaf);
        for (std::size_t i = 0; i < ptr->size(); ++i)
          ptr->data[i] -= cfg.eta_w * gw.data[i];
      }
    }

    // per-epoch record
    TrajectoryRecord rec;
    rec.epoch = epoch;
    rec.l_train = l_train_sum / static_cast<double>(train_batches);
    rec.l_val = l_val_sum / static_cast<double>(val_batches);
    rec.l_beta = beta_decay_value(arch.alpha);
    const auto stats = alpha_stats(arch.alpha);
    for (const auto& s : stats) {
      rec.edge_mean.push_back(s.mean);
      rec.edge_median.push_back(s.median);
      rec.edge_std.push_back(s.std);
    }
    const auto fired = update_early_stop(stop, rec.edge_std);
    rec.m = stop.m();
    const Genotype geno = discretize(arch);
    rec.genotype = genotype_to_string(geno, net.ops);
    if (oracle != nullptr) rec.oracle_score = oracle->evaluate(rec.genotype);
    res.trajectory.push_back(std::move(rec));
    res.epochs_run = epoch + 1;

    const int want = cfg.early_stop == StopCriterion::C1   ? 1
                     : cfg.early_stop == StopCriterion::C2 ? 2
                     : cfg.early_stop == StopCriterion::C3 ? 3
                                                           : 0;
    if (want != 0 && fired.count(want) != 0) {
      res.stopped_early = true;
      break;
    }
  }

  res.final_genotype = discretize(arch);
  res.final_genotype_str = genotype_to_string(res.final_genotype, net.ops);
  return res;
}

}  // namespace bdpp
