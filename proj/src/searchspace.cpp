#include "bdpp/searchspace.hpp"

#include <cmath>

namespace bdpp {

OpSet OpSet::canonical() {
  return from_names({"none", "skip", "lin", "lin_relu", "avg"});
}

OpSet OpSet::from_names(const std::vector<std::string>& names) {
  if (names.empty()) throw std::invalid_argument("opset: must be non-empty");
  OpSet o;
  o.names = names;
  for (const auto& n : names) {
    if (n == "none") o.types.push_back(OpType::None);
    else if (n == "skip") o.types.push_back(OpType::Skip);
    else if (n == "lin") o.types.push_back(OpType::Lin);
    else if (n == "lin_relu") o.types.push_back(OpType::LinRelu);
    else if (n == "avg") o.types.push_back(OpType::Avg);
    else throw std::invalid_argument("opset: unknown op name '" + n + "'");
  }
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j)
      if (names[i] == names[j])
        throw std::invalid_argument("opset: duplicate op name '" + names[i] + "'");
  return o;
}

std::optional<std::size_t> OpSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  return std::nullopt;
}

std::size_t OpSet::num_parametric() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < size(); ++k)
    if (is_parametric(k)) ++n;
  return n;
}

Tensor beta_of_alpha(const ArchParams& arch) {
  Graph g;
  const int a = g.leaf(arch.alpha, LeafKind::Const);
  return g.value(g.softmax(a));
}

Genotype discretize(const ArchParams& arch) {
  const std::size_t E = arch.alpha.rows(), K = arch.alpha.cols();
  Genotype g;
  g.ops.resize(E);
  for (std::size_t e = 0; e < E; ++e) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k)
      if (arch.alpha.at(e, k) > arch.alpha.at(e, best)) best = k;
    g.ops[e] = static_cast<int>(best);
  }
  return g;
}

std::string genotype_to_string(const Genotype& g, const OpSet& ops) {
  if (g.ops.size() != kNumEdges)
    throw std::invalid_argument("genotype: expected 6 edges");
  std::string s;
  std::size_t e = 0;
  for (int node = 1; node < kNumCellNodes; ++node) {
    if (node > 1) s += "+";
    for (int in = 0; in < node; ++in, ++e) {
      const int op = g.ops[e];
      if (op < 0 || static_cast<std::size_t>(op) >= ops.size())
        throw std::invalid_argument("genotype: op index out of range");
      // adjacent ops in one node share the separating '|'
      s += "|" + ops.names[static_cast<std::size_t>(op)] + "~" +
           std::to_string(in);
    }
    s += "|";
  }
  return s;
}

Genotype string_to_genotype(const std::string& s, const OpSet& ops) {
  Genotype g;
  std::size_t pos = 0;
  auto expect = [&](char c) {
    if (pos >= s.size() || s[pos] != c)
      throw ParseError(std::string("genotype: expected '") + c + "'", pos);
    ++pos;
  };
  for (int node = 1; node < kNumCellNodes; ++node) {
    if (node > 1) expect('+');
    expect('|');
    for (int in = 0; in < node; ++in) {
      const std::size_t name_start = pos;
      while (pos < s.size() && s[pos] != '~') ++pos;
      if (pos >= s.size()) throw ParseError("genotype: expected '~'", pos);
      const std::string name = s.substr(name_start, pos - name_start);
      const auto idx = ops.index_of(name);
      if (!idx)
        throw ParseError("genotype: unknown op name '" + name + "'", name_start);
      ++pos;  // '~'
      const std::size_t num_start = pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
      if (pos == num_start) throw ParseError("genotype: expected input index", pos);
      const int got = std::stoi(s.substr(num_start, pos - num_start));
      if (got != in)
        throw ParseError("genotype: expected input index " + std::to_string(in),
                         num_start);
      expect('|');
      g.ops.push_back(static_cast<int>(*idx));
    }
  }
  if (pos != s.size()) throw ParseError("genotype: trailing characters", pos);
  return g;
}

static Tensor make_adapter(std::size_t input_dim, std::size_t width) {
  if (input_dim < width)
    throw std::invalid_argument("supernet: input_dim must be >= width");
  Tensor a = Tensor::zeros({width, input_dim});
  // strided group means: channel i pools dims i, i+width, ... so narrow
  // widths still see a spread of the input rather than one contiguous block
  std::vector<std::size_t> len(width, 0);
  for (std::size_t d = 0; d < input_dim; ++d) ++len[d % width];
  for (std::size_t d = 0; d < input_dim; ++d)
    a.at(d % width, d) = 1.0 / static_cast<double>(len[d % width]);
  return a;
}

Supernet Supernet::init(const SupernetConfig& cfg, const OpSet& ops, Rng& rng) {
  if (cfg.width < 1 || cfg.depth < 1 || cfg.num_classes < 1)
    throw std::invalid_argument("supernet: width/depth/classes must be >= 1");
  Supernet net;
  net.cfg = cfg;
  net.ops = ops;
  net.adapter = make_adapter(cfg.input_dim, cfg.width);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.width));
  auto init_mat = [&](std::size_t r, std::size_t c) {
    Tensor t = Tensor::zeros({r, c});
    for (auto& v : t.data) v = scale * rng.normal();
    return t;
  };
  // edge maps start near the identity: residual-style init keeps early
  // signal propagation intact while leaving the map trainable
  auto init_edge_mat = [&](std::size_t n) {
    Tensor t = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        t.at(i, j) = (i == j ? 1.0 : 0.0) + 0.1 * scale * rng.normal();
    return t;
  };
  net.cells.resize(cfg.depth);
  for (auto& cell : net.cells) {
    cell.resize(kNumEdges);
    for (auto& ew : cell) {
      ew.w.resize(ops.size());
      ew.b.resize(ops.size());
      for (std::size_t k = 0; k < ops.size(); ++k)
        if (ops.is_parametric(k)) {
          ew.w[k] = init_edge_mat(cfg.width);
          ew.b[k] = Tensor::zeros({cfg.width});
        }
    }
  }
  net.head_w = init_mat(cfg.num_classes, cfg.width);
  net.head_b = Tensor::zeros({cfg.num_classes});
  return net;
}

std::size_t Supernet::param_count(const SupernetConfig& cfg, const OpSet& ops) {
  const std::size_t per_op = cfg.width * cfg.width + cfg.width;
  return cfg.depth * kNumEdges * ops.num_parametric() * per_op +
         cfg.num_classes * (cfg.width + 1);
}

int mixed_edge_forward(Graph& g, int beta_node, std::size_t edge_index, int x,
                       const OpSet& ops, const std::vector<int>& leaf_w,
                       const std::vector<int>& leaf_b) {
  int acc = -1;
  for (std::size_t k = 0; k < ops.size(); ++k) {
    int term = -1;
    switch (ops.types[k]) {
      case OpType::None:
        continue;  // contributes zero regardless of beta
      case OpType::Skip:
        term = g.scale_entry(beta_node, edge_index, k, x);
        break;
      case OpType::Lin:
        term = g.scale_entry(beta_node, edge_index, k,
                             g.linear(x, leaf_w[k], leaf_b[k]));
        break;
      case OpType::LinRelu:
        term = g.scale_entry(beta_node, edge_index, k,
                             g.relu(g.linear(x, leaf_w[k], leaf_b[k])));
        break;
      case OpType::Avg:
        term = g.scale_entry(beta_node, edge_index, k, g.mean_broadcast(x));
        break;
    }
    acc = acc < 0 ? term : g.add(acc, term);
  }
  if (acc < 0) {
    // all-none op set: output is zeros shaped like x
    const Tensor& xv = g.value(x);
    acc = g.scalar_mul(0.0, g.leaf(Tensor::zeros(xv.shape), LeafKind::Const));
  }
  return acc;
}

Tensor mixed_edge_forward(const Tensor& x, std::size_t edge_index,
                          const ArchParams& arch, const OpSet& ops,
                          const EdgeWeights& weights) {
  Graph g;
  const int a = g.leaf(arch.alpha, LeafKind::Const);
  const int beta = g.softmax(a);
  Tensor xm = x;
  if (xm.shape.size() == 1) xm.shape = {1, xm.size()};
  const int xn = g.leaf(xm, LeafKind::Input);
  std::vector<int> lw(ops.size(), -1), lb(ops.size(), -1);
  for (std::size_t k = 0; k < ops.size(); ++k)
    if (ops.is_parametric(k)) {
      lw[k] = g.leaf(weights.w[k], LeafKind::Weight);
      lb[k] = g.leaf(weights.b[k], LeafKind::Weight);
    }
  const int out = mixed_edge_forward(g, beta, edge_index, xn, ops, lw, lb);
  Tensor result = g.value(out);
  if (x.shape.size() == 1) result.shape = {result.size()};
  return result;
}

SupernetGraph supernet_forward(Graph& g, Supernet& net, const ArchParams& arch,
                               const Tensor& batch_x) {
  if (batch_x.shape.size() != 2 || batch_x.cols() != net.cfg.input_dim)
    throw ShapeError("supernet_forward: batch " + batch_x.shape_str() +
                     " vs input_dim " + std::to_string(net.cfg.input_dim));
  SupernetGraph sg;
  sg.alpha_leaf = g.leaf(arch.alpha, LeafKind::Alpha);
  sg.beta_node = g.softmax(sg.alpha_leaf);
  const int x_in = g.leaf(batch_x, LeafKind::Input);
  const int adapter_w = g.leaf(net.adapter, LeafKind::Const);
  const int adapter_b = g.leaf(Tensor::zeros({net.cfg.width}), LeafKind::Const);
  int h = g.linear(x_in, adapter_w, adapter_b);

  for (auto& cell : net.cells) {
    std::array<int, kNumCellNodes> node_out{};
    node_out[0] = h;
    std::size_t e = 0;
    for (int node = 1; node < kNumCellNodes; ++node) {
      int acc = -1;
      for (int in = 0; in < node; ++in, ++e) {
        EdgeWeights& ew = cell[e];
        std::vector<int> lw(net.ops.size(), -1), lb(net.ops.size(), -1);
        for (std::size_t k = 0; k < net.ops.size(); ++k)
          if (net.ops.is_parametric(k)) {
            lw[k] = g.leaf(ew.w[k], LeafKind::Weight);
            lb[k] = g.leaf(ew.b[k], LeafKind::Weight);
            sg.weight_leaves.emplace_back(&ew.w[k], lw[k]);
            sg.weight_leaves.emplace_back(&ew.b[k], lb[k]);
          }
        const int me = mixed_edge_forward(g, sg.beta_node, e, node_out[in],
                                          net.ops, lw, lb);
        acc = acc < 0 ? me : g.add(acc, me);
      }
      node_out[node] = acc;
    }
    h = node_out[kNumCellNodes - 1];
  }

  const int hw = g.leaf(net.head_w, LeafKind::Weight);
  const int hb = g.leaf(net.head_b, LeafKind::Weight);
  sg.weight_leaves.emplace_back(&net.head_w, hw);
  sg.weight_leaves.emplace_back(&net.head_b, hb);
  sg.logits = g.linear(h, hw, hb);
  return sg;
}

}  // namespace bdpp
