#include "bdpp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bdpp/rng.hpp"

namespace bdpp {

Dataset generate_task(const SyntheticTaskParams& p) {
  if (p.dim < p.num_classes)
    throw std::invalid_argument("task: dim must be >= num_classes");
  if (p.n == 0 || p.num_classes == 0)
    throw std::invalid_argument("task: n and num_classes must be >= 1");
  Rng rng(p.seed);
  Dataset d;
  d.x = Tensor::zeros({p.n, p.dim});
  d.y.resize(p.n);
  // class mean: +3 sigma at the class's own dimension, -2 sigma elsewhere;
  // pairwise mean separation at the planted dimension is 5 sigma. The
  // negative off-class mean makes most non-signal mass sub-zero, so
  // rectification strips it while the positive class spike passes through.
  for (std::size_t i = 0; i < p.n; ++i) {
    const std::size_t c = i % p.num_classes;
    d.y[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < p.dim; ++j) {
      const double mean = j == c ? 3.0 * p.noise : -2.0 * p.noise;
      d.x.at(i, j) = mean + p.noise * rng.normal();
    }
  }
  return d;
}

std::vector<Genotype> enumerate_genotypes(const OpSet& ops) {
  const std::size_t K = ops.size();
  std::size_t total = 1;
  for (std::size_t e = 0; e < kNumEdges; ++e) total *= K;
  std::vector<Genotype> out;
  out.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Genotype g;
    g.ops.resize(kNumEdges);
    std::size_t v = idx;
    for (std::size_t e = kNumEdges; e-- > 0;) {
      g.ops[e] = static_cast<int>(v % K);
      v /= K;
    }
    out.push_back(std::move(g));
  }
  return out;
}

namespace {

// interpretable scoring rule: processing ops pay off in proportion to how
// much signal the edge carries, skip always earns a flat preservation
// utility, and there are penalties for none-domination and skip-collapse
double processing_utility(OpType t) {
  switch (t) {
    case OpType::None: return 0.0;
    case OpType::Skip: return 0.0;
    case OpType::Lin: return 0.75;
    case OpType::LinRelu: return 0.9;
    case OpType::Avg: return 0.25;
  }
  return 0.0;
}

constexpr double kSkipUtility = 0.15;
// only the inner bottleneck edge (1->2) benefits from processing; the rest
// of the cell is pure routing where preservation wins
constexpr std::array<double, kNumEdges> kEdgeSignal{0.0, 0.0, 1.0, 0.0, 0.0, 0.0};

double raw_score(const Genotype& g, const OpSet& ops, std::uint64_t seed,
                 std::size_t index) {
  double s = 0.0;
  std::size_t none_count = 0, skip_count = 0;
  for (std::size_t e = 0; e < kNumEdges; ++e) {
    const OpType t = ops.types[static_cast<std::size_t>(g.ops[e])];
    s += t == OpType::Skip ? kSkipUtility : kEdgeSignal[e] * processing_utility(t);
    if (t == OpType::None) ++none_count;
    if (t == OpType::Skip) ++skip_count;
  }
  if (none_count >= 4)
    s -= 0.5 * static_cast<double>(none_count - 3);
  if (skip_count == kNumEdges) s -= 1.0;
  // seeded noise, small against the utility gaps
  const std::uint64_t h1 = hash_u64(seed * 0x100000001b3ULL + index);
  s += 0.02 * (static_cast<double>(h1 >> 11) * 0x1.0p-53 - 0.5);
  // tie perturbation guaranteeing a unique argmax
  const std::uint64_t h2 = hash_u64(h1 ^ 0x5bf03635d1f4b2a7ULL);
  s += 1e-9 * static_cast<double>(h2 >> 11) * 0x1.0p-53;
  return s;
}

}  // namespace

TabularBenchmark TabularBenchmark::generate(std::uint64_t seed) {
  const OpSet ops = OpSet::canonical();
  const auto all = enumerate_genotypes(ops);
  std::vector<double> raw(all.size());
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < all.size(); ++i) {
    raw[i] = raw_score(all[i], ops, seed, i);
    lo = std::min(lo, raw[i]);
    hi = std::max(hi, raw[i]);
  }
  TabularBenchmark b;
  b.provenance_ = Provenance::Generated;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const double score = (raw[i] - lo) / (hi - lo);
    const std::string key = genotype_to_string(all[i], ops);
    b.scores_.emplace(key, score);
    b.ordered_.emplace_back(key, score);
  }
  return b;
}

double TabularBenchmark::evaluate(const std::string& genotype) const {
  const auto it = scores_.find(genotype);
  if (it == scores_.end())
    throw std::out_of_range("benchmark: unknown genotype '" + genotype + "'");
  return it->second;
}

double TabularBenchmark::evaluate(const Genotype& g, const OpSet& ops) const {
  return evaluate(genotype_to_string(g, ops));
}

bool TabularBenchmark::complete() const {
  const OpSet ops = OpSet::canonical();
  const auto all = enumerate_genotypes(ops);
  if (scores_.size() != all.size()) return false;
  for (const auto& g : all)
    if (scores_.find(genotype_to_string(g, ops)) == scores_.end()) return false;
  return true;
}

std::pair<std::string, double> TabularBenchmark::best() const {
  if (!complete()) {
    const OpSet ops = OpSet::canonical();
    std::string missing;
    std::size_t shown = 0;
    for (const auto& g : enumerate_genotypes(ops)) {
      const std::string key = genotype_to_string(g, ops);
      if (scores_.find(key) == scores_.end()) {
        if (shown++ < 5) missing += " " + key;
      }
    }
    throw std::invalid_argument("benchmark: incomplete table, missing " +
                                std::to_string(shown) + " genotypes:" + missing);
  }
  std::string best_key;
  double best_score = -1e300;
  for (const auto& [key, score] : ordered_) {
    if (score > best_score || (score == best_score && key < best_key)) {
      best_key = key;
      best_score = score;
    }
  }
  return {best_key, best_score};
}

void TabularBenchmark::save_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("benchmark: cannot open '" + path + "' for writing");
  out << "genotype,score\n";
  char buf[40];
  for (const auto& [key, score] : ordered_) {
    std::snprintf(buf, sizeof buf, "%.12g", score);
    out << key << "," << buf << "\n";
  }
  if (!out) throw IoError("benchmark: write failure on '" + path + "'");
}

TabularBenchmark TabularBenchmark::load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("benchmark: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "genotype,score")
    throw IoError("benchmark: bad header in '" + path + "'");
  TabularBenchmark b;
  b.provenance_ = Provenance::Imported;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw IoError("benchmark: malformed line " + std::to_string(lineno));
    const std::string key = line.substr(0, comma);
    double score;
    try {
      score = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw IoError("benchmark: bad score at line " + std::to_string(lineno));
    }
    if (!b.scores_.emplace(key, score).second)
      throw IoError("benchmark: duplicate genotype at line " +
                    std::to_string(lineno));
    b.ordered_.emplace_back(key, score);
  }
  return b;
}

}  // namespace bdpp
