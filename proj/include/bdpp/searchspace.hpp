#pragma once
#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bdpp/graph.hpp"
#include "bdpp/rng.hpp"
#include "bdpp/tensor.hpp"

namespace bdpp {

struct ParseError : std::runtime_error {
  std::size_t position;
  ParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"),
        position(pos) {}
};

// Vector-scale surrogates of the NAS-Bench-201 operation set.
enum class OpType { None, Skip, Lin, LinRelu, Avg };

struct OpSet {
  std::vector<std::string> names;
  std::vector<OpType> types;

  static OpSet canonical();  // [none, skip, lin, lin_relu, avg]
  static OpSet from_names(const std::vector<std::string>& names);

  std::size_t size() const { return names.size(); }
  std::optional<std::size_t> index_of(const std::string& name) const;
  bool is_parametric(std::size_t k) const {
    return types[k] == OpType::Lin || types[k] == OpType::LinRelu;
  }
  std::size_t num_parametric() const;
};

// Cell topology: 4 nodes, edges in fixed order.
inline constexpr int kNumCellNodes = 4;
inline constexpr std::size_t kNumEdges = 6;
inline constexpr std::array<std::pair<int, int>, kNumEdges> kEdges{
    {{0, 1}, {0, 2}, {1, 2}, {0, 3}, {1, 3}, {2, 3}}};

struct ArchParams {
  Tensor alpha;  // [num_edges x |O|]

  static ArchParams zeros(std::size_t num_edges, std::size_t num_ops) {
    return ArchParams{Tensor::zeros({num_edges, num_ops})};
  }
};

// Row-wise stable softmax of alpha.
Tensor beta_of_alpha(const ArchParams& arch);

struct Genotype {
  std::vector<int> ops;  // one op index per edge, fixed edge order

  bool operator==(const Genotype&) const = default;
};

// Per-edge argmax of alpha; ties broken by lowest op index.
Genotype discretize(const ArchParams& arch);

// NAS-Bench-201-style string: |op~0|+|op~0|op~1|+|op~0|op~1|op~2|
std::string genotype_to_string(const Genotype& g, const OpSet& ops);
Genotype string_to_genotype(const std::string& s, const OpSet& ops);

struct SupernetConfig {
  std::size_t input_dim = 8;
  std::size_t width = 8;       // proxy channels
  std::size_t depth = 3;       // proxy layers
  std::size_t num_classes = 4;
};

struct EdgeWeights {
  // one {W, b} pair per parametric op index, empty tensors otherwise
  std::vector<Tensor> w;
  std::vector<Tensor> b;
};

struct Supernet {
  SupernetConfig cfg;
  OpSet ops;
  std::vector<std::vector<EdgeWeights>> cells;  // [depth][num_edges]
  Tensor head_w, head_b;
  Tensor adapter;  // fixed input projection [width x input_dim], not trained

  static Supernet init(const SupernetConfig& cfg, const OpSet& ops, Rng& rng);
  static std::size_t param_count(const SupernetConfig& cfg, const OpSet& ops);

  template <typename Fn>
  void for_each_param(Fn&& fn) {
    for (auto& cell : cells)
      for (auto& ew : cell)
        for (std::size_t k = 0; k < ew.w.size(); ++k)
          if (ew.w[k].size() > 0) {
            fn(ew.w[k]);
            fn(ew.b[k]);
          }
    fn(head_w);
    fn(head_b);
  }
};

// Handles into a freshly built forward graph.
struct SupernetGraph {
  int alpha_leaf = -1;
  int beta_node = -1;
  int logits = -1;
  std::vector<std::pair<Tensor*, int>> weight_leaves;  // param tensor -> leaf id
};

// Mixed edge: sum_k beta[edge,k] * O_k(x). `weights` are this edge's
// parametric weights (already recorded as leaves via `leaf_w`/`leaf_b`).
int mixed_edge_forward(Graph& g, int beta_node, std::size_t edge_index, int x,
                       const OpSet& ops, const std::vector<int>& leaf_w,
                       const std::vector<int>& leaf_b);

// Standalone evaluation from raw tensors; builds a one-off graph.
Tensor mixed_edge_forward(const Tensor& x, std::size_t edge_index,
                          const ArchParams& arch, const OpSet& ops,
                          const EdgeWeights& weights);

// Builds the full forward pass: adapter -> depth cells -> classifier head.
SupernetGraph supernet_forward(Graph& g, Supernet& net, const ArchParams& arch,
                               const Tensor& batch_x);

}  // namespace bdpp
