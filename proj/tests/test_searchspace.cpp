#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bdpp/oracle.hpp"
#include "bdpp/regularizers.hpp"
#include "bdpp/searchspace.hpp"

using namespace bdpp;

TEST_CASE("beta rows: uniform, ratios, shift invariance") {
  ArchParams a = ArchParams::zeros(1, 5);
  const Tensor b = beta_of_alpha(a);
  for (double v : b.data) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));

  ArchParams c{Tensor({1, 2}, {std::log(3.0), 0.0})};
  const Tensor bc = beta_of_alpha(c);
  CHECK(bc.data[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(bc.data[1] == doctest::Approx(0.25).epsilon(1e-12));

  ArchParams shifted = c;
  for (auto& v : shifted.alpha.data) v += 7.0;
  const Tensor bs = beta_of_alpha(shifted);
  for (std::size_t i = 0; i < bc.size(); ++i)
    CHECK(std::abs(bc.data[i] - bs.data[i]) < 1e-12);
}

TEST_CASE("beta rows are positive and sum to one") {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    ArchParams a = ArchParams::zeros(6, 5);
    for (auto& v : a.alpha.data) v = rng.uniform(-30.0, 30.0);
    const Tensor b = beta_of_alpha(a);
    for (std::size_t e = 0; e < 6; ++e) {
      double s = 0.0;
      for (std::size_t k = 0; k < 5; ++k) {
        CHECK(b.at(e, k) > 0.0);
        s += b.at(e, k);
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("mixed edge: uniform alpha averages all ops") {
  const OpSet ops = OpSet::canonical();
  Rng rng(4);
  SupernetConfig cfg{4, 4, 1, 3};
  Supernet net = Supernet::init(cfg, ops, rng);
  const EdgeWeights& ew = net.cells[0][0];
  ArchParams arch = ArchParams::zeros(kNumEdges, ops.size());
  const Tensor x({1, 4}, {0.5, -1.0, 2.0, 0.25});

  const Tensor out = mixed_edge_forward(x, 0, arch, ops, ew);

  // reference: evaluate each op by hand
  Graph g;
  const int xn = g.leaf(x, LeafKind::Const);
  const int lw = g.leaf(ew.w[2], LeafKind::Const);
  const int lb = g.leaf(ew.b[2], LeafKind::Const);
  const int rw = g.leaf(ew.w[3], LeafKind::Const);
  const int rb = g.leaf(ew.b[3], LeafKind::Const);
  const Tensor lin = g.value(g.linear(xn, lw, lb));
  const Tensor lre = g.value(g.relu(g.linear(xn, rw, rb)));
  const Tensor avg = g.value(g.mean_broadcast(xn));
  for (std::size_t i = 0; i < 4; ++i) {
    const double expect =
        0.2 * (0.0 + x.data[i] + lin.data[i] + lre.data[i] + avg.data[i]);
    CHECK(out.data[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("mixed edge: saturated skip returns the input") {
  const OpSet ops = OpSet::canonical();
  Rng rng(6);
  Supernet net = Supernet::init({4, 4, 1, 3}, ops, rng);
  ArchParams arch = ArchParams::zeros(kNumEdges, ops.size());
  arch.alpha.at(2, 1) = 1e6;  // skip
  const Tensor x({1, 4}, {1.0, 2.0, -3.0, 0.5});
  const Tensor out = mixed_edge_forward(x, 2, arch, ops, net.cells[0][2]);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(std::abs(out.data[i] - x.data[i]) < 1e-9);
}

TEST_CASE("mixed edge over a (skip, none) op set") {
  const OpSet ops = OpSet::from_names({"skip", "none"});
  ArchParams arch = ArchParams::zeros(1, 2);
  arch.alpha.at(0, 0) = std::log(3.0);
  EdgeWeights ew;
  ew.w.resize(2);
  ew.b.resize(2);
  const Tensor x({2}, {1.0, 2.0});
  const Tensor out = mixed_edge_forward(x, 0, arch, ops, ew);
  CHECK(out.data[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(out.data[1] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("discretize: ties break to the lowest op index") {
  ArchParams a = ArchParams::zeros(kNumEdges, 5);
  const Genotype g = discretize(a);
  for (int op : g.ops) CHECK(op == 0);

  ArchParams b = ArchParams::zeros(kNumEdges, 5);
  for (std::size_t e = 0; e < kNumEdges; ++e) b.alpha.at(e, (e + 1) % 5) = 1.0;
  const Genotype gb = discretize(b);
  for (std::size_t e = 0; e < kNumEdges; ++e)
    CHECK(gb.ops[e] == static_cast<int>((e + 1) % 5));
}

TEST_CASE("discretize unchanged by a pure beta-decay step") {
  Rng rng(8);
  for (int t = 0; t < 1000; ++t) {
    ArchParams a = ArchParams::zeros(1, 5);
    for (auto& v : a.alpha.data) v = rng.uniform(-3.0, 3.0);
    const double le = rng.uniform(0.0, 1.0);
    ArchParams stepped{
        alpha_penalty_step(a.alpha, AlphaRegVariant::BetaDecay, le, 1.0, Tensor{})};
    CHECK(discretize(a).ops[0] == discretize(stepped).ops[0]);
  }
}

TEST_CASE("discretize invariant under per-row monotone transforms") {
  Rng rng(10);
  for (int t = 0; t < 200; ++t) {
    ArchParams a = ArchParams::zeros(kNumEdges, 5);
    for (auto& v : a.alpha.data) v = rng.uniform(-3.0, 3.0);
    ArchParams b = a;
    for (std::size_t e = 0; e < kNumEdges; ++e) {
      const double scale = rng.uniform(0.1, 5.0), shift = rng.uniform(-4.0, 4.0);
      for (std::size_t k = 0; k < 5; ++k)
        b.alpha.at(e, k) = scale * a.alpha.at(e, k) + shift;
    }
    CHECK(discretize(a) == discretize(b));
  }
}

TEST_CASE("genotype string grammar") {
  const OpSet ops = OpSet::canonical();
  Genotype all_skip;
  all_skip.ops.assign(kNumEdges, 1);
  CHECK(genotype_to_string(all_skip, ops) ==
        "|skip~0|+|skip~0|skip~1|+|skip~0|skip~1|skip~2|");
  CHECK(string_to_genotype("|skip~0|+|skip~0|skip~1|+|skip~0|skip~1|skip~2|", ops) ==
        all_skip);
}

TEST_CASE("genotype round trip over the whole space") {
  const OpSet ops = OpSet::canonical();
  for (const auto& g : enumerate_genotypes(ops))
    CHECK(string_to_genotype(genotype_to_string(g, ops), ops) == g);
}

TEST_CASE("genotype parse errors carry positions") {
  const OpSet ops = OpSet::canonical();
  CHECK_THROWS_AS(string_to_genotype("|bogus~0|+|skip~0|skip~1|+|skip~0|skip~1|skip~2|", ops),
                  ParseError);
  CHECK_THROWS_AS(string_to_genotype("|skip~0|", ops), ParseError);
  try {
    string_to_genotype("|bogus~0|+|skip~0|skip~1|+|skip~0|skip~1|skip~2|", ops);
  } catch (const ParseError& e) {
    CHECK(e.position == 1);
  }
}

TEST_CASE("parameter count matches the closed form") {
  const OpSet ops = OpSet::canonical();
  for (std::size_t depth : {1u, 3u, 5u})
    for (std::size_t width : {1u, 2u, 8u, 16u}) {
      SupernetConfig cfg{16, width, depth, 4};
      Rng rng(1);
      Supernet net = Supernet::init(cfg, ops, rng);
      std::size_t counted = 0;
      net.for_each_param([&](Tensor& t) { counted += t.size(); });
      CHECK(counted == Supernet::param_count(cfg, ops));
      CHECK(counted == depth * 6 * 2 * (width * width + width) + 4 * (width + 1));
    }
}

TEST_CASE("all-none supernet outputs the head bias") {
  const OpSet ops = OpSet::canonical();
  Rng rng(12);
  Supernet net = Supernet::init({4, 4, 1, 3}, ops, rng);
  for (auto& v : net.head_b.data) v = rng.uniform(-1.0, 1.0);
  ArchParams arch = ArchParams::zeros(kNumEdges, ops.size());
  for (std::size_t e = 0; e < kNumEdges; ++e) arch.alpha.at(e, 0) = 1e6;
  Tensor x = Tensor::zeros({2, 4});
  for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
  Graph g;
  const auto sg = supernet_forward(g, net, arch, x);
  const Tensor& logits = g.value(sg.logits);
  CHECK(logits.rows() == 2);
  CHECK(logits.cols() == 3);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(std::abs(logits.at(i, j) - net.head_b.at(j)) < 1e-9);
}

TEST_CASE("supernet forward is deterministic") {
  const OpSet ops = OpSet::canonical();
  Tensor x = Tensor::zeros({3, 8});
  Rng data_rng(77);
  for (auto& v : x.data) v = data_rng.uniform(-1.0, 1.0);
  Tensor first;
  for (int run = 0; run < 2; ++run) {
    Rng rng(13);
    Supernet net = Supernet::init({8, 8, 2, 4}, ops, rng);
    ArchParams arch = ArchParams::zeros(kNumEdges, ops.size());
    Rng arng(14);
    for (auto& v : arch.alpha.data) v = arng.uniform(-0.5, 0.5);
    Graph g;
    const auto sg = supernet_forward(g, net, arch, x);
    if (run == 0) {
      first = g.value(sg.logits);
    } else {
      const Tensor& second = g.value(sg.logits);
      for (std::size_t i = 0; i < first.size(); ++i)
        CHECK(first.data[i] == second.data[i]);
    }
  }
}

TEST_CASE("supernet loss gradients pass finite differences") {
  const OpSet ops = OpSet::canonical();
  Rng rng(15);
  Supernet net = Supernet::init({6, 6, 2, 3}, ops, rng);
  Tensor x = Tensor::zeros({4, 6});
  for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
  const std::vector<int> labels{0, 1, 2, 0};
  ArchParams arch = ArchParams::zeros(kNumEdges, ops.size());
  for (auto& v : arch.alpha.data) v = rng.uniform(-0.3, 0.3);

  // alpha gradient via direct tape + manual central differences
  {
    Graph g;
    auto sg = supernet_forward(g, net, arch, x);
    g.backward(g.cross_entropy(sg.logits, labels));
    const Tensor ga = g.grad(sg.alpha_leaf);
    const double h = 1e-5;
    double max_err = 0.0;
    for (std::size_t i = 0; i < arch.alpha.size(); ++i) {
      ArchParams ap = arch;
      ap.alpha.data[i] += h;
      Graph g1;
      auto s1 = supernet_forward(g1, net, ap, x);
      const double fp = g1.value(g1.cross_entropy(s1.logits, labels)).data[0];
      ap.alpha.data[i] -= 2 * h;
      Graph g2;
      auto s2 = supernet_forward(g2, net, ap, x);
      const double fm = g2.value(g2.cross_entropy(s2.logits, labels)).data[0];
      const double fd = (fp - fm) / (2 * h);
      max_err = std::max(max_err, std::abs(ga.data[i] - fd) / std::max(1.0, std::abs(fd)));
    }
    CHECK(max_err < 1e-4);
  }

  // gradient wrt one weight matrix
  {
    Graph g;
    auto sg = supernet_forward(g, net, arch, x);
    g.backward(g.cross_entropy(sg.logits, labels));
    Tensor* target = sg.weight_leaves.front().first;
    const Tensor gw = g.grad(sg.weight_leaves.front().second);
    const double h = 1e-5;
    double max_err = 0.0;
    for (std::size_t i = 0; i < target->size(); ++i) {
      const double orig = target->data[i];
      target->data[i] = orig + h;
      Graph g1;
      auto s1 = supernet_forward(g1, net, arch, x);
      const double fp = g1.value(g1.cross_entropy(s1.logits, labels)).data[0];
      target->data[i] = orig - h;
      Graph g2;
      auto s2 = supernet_forward(g2, net, arch, x);
      const double fm = g2.value(g2.cross_entropy(s2.logits, labels)).data[0];
      target->data[i] = orig;
      const double fd = (fp - fm) / (2 * h);
      max_err = std::max(max_err, std::abs(gw.data[i] - fd) / std::max(1.0, std::abs(fd)));
    }
    CHECK(max_err < 1e-4);
  }
}

TEST_CASE("beta row norm bounds at the extremes") {
  ArchParams uniform = ArchParams::zeros(1, 5);
  const Tensor bu = beta_of_alpha(uniform);
  double s = 0.0;
  for (double v : bu.data) s += v * v;
  CHECK(std::abs(std::sqrt(s) - 1.0 / std::sqrt(5.0)) < 1e-12);

  ArchParams onehot = ArchParams::zeros(1, 5);
  onehot.alpha.at(0, 3) = 1e4;
  const Tensor bo = beta_of_alpha(onehot);
  s = 0.0;
  for (double v : bo.data) s += v * v;
  CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-12);

  Rng rng(16);
  for (int t = 0; t < 200; ++t) {
    ArchParams a = ArchParams::zeros(1, 5);
    for (auto& v : a.alpha.data) v = rng.uniform(-5.0, 5.0);
    const Tensor b = beta_of_alpha(a);
    s = 0.0;
    for (double v : b.data) s += v * v;
    const double norm = std::sqrt(s);
    CHECK(norm >= 1.0 / std::sqrt(5.0) - 1e-12);
    CHECK(norm <= 1.0 + 1e-12);
  }
}

TEST_CASE("supernet rejects wrong input width") {
  const OpSet ops = OpSet::canonical();
  Rng rng(17);
  Supernet net = Supernet::init({8, 8, 1, 3}, ops, rng);
  ArchParams arch = ArchParams::zeros(kNumEdges, ops.size());
  Graph g;
  CHECK_THROWS_AS(supernet_forward(g, net, arch, Tensor::zeros({2, 5})), ShapeError);
}
