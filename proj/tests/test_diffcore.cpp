#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bdpp/graph.hpp"
#include "bdpp/rng.hpp"

using namespace bdpp;

TEST_CASE("logsumexp on equal inputs") {
  Graph g;
  const int x = g.leaf(Tensor({2}, {0.0, 0.0}), LeafKind::Const);
  CHECK(g.value(g.logsumexp(x)).data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Graph g2;
  const int y = g2.leaf(Tensor({5}, {1, 1, 1, 1, 1}), LeafKind::Const);
  CHECK(g2.value(g2.logsumexp(y)).data[0] ==
        doctest::Approx(1.0 + std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("softmax of (ln 3, 0)") {
  Graph g;
  const int x = g.leaf(Tensor({2}, {std::log(3.0), 0.0}), LeafKind::Const);
  const Tensor& sm = g.value(g.softmax(x));
  CHECK(sm.data[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(sm.data[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("backward of logsumexp is softmax") {
  Graph g;
  const int a = g.leaf(Tensor({2}, {std::log(3.0), 0.0}), LeafKind::Alpha);
  g.backward(g.logsumexp(a));
  CHECK(g.grad(a).data[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(g.grad(a).data[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("mse of a node with itself has zero gradient") {
  Graph g;
  const int x = g.leaf(Tensor({3}, {1.0, -2.0, 0.5}), LeafKind::Weight);
  g.backward(g.mse(x, x));
  for (double v : g.grad(x).data) CHECK(v == 0.0);
}

TEST_CASE("cross entropy gradient at uniform logits") {
  Graph g;
  const int x = g.leaf(Tensor({1, 2}, {0.0, 0.0}), LeafKind::Weight);
  g.backward(g.cross_entropy(x, {0}));
  CHECK(g.grad(x).data[0] == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(g.grad(x).data[1] == doctest::Approx(0.5).epsilon(1e-9));
  // independently: central differences
  const double err = finite_diff_check(
      [](Graph& fg, int lf) { return fg.cross_entropy(lf, {0}); },
      Tensor({1, 2}, {0.0, 0.0}), 1e-6);
  CHECK(err < 1e-8);
}

TEST_CASE("finite_diff_check on smooth primitives") {
  Rng rng(1);
  Tensor p = Tensor::zeros({8});
  for (auto& v : p.data) v = rng.uniform(-2.0, 2.0);
  CHECK(finite_diff_check(
            [](Graph& g, int lf) { return g.logsumexp(lf); }, p, 1e-5) < 1e-6);
  // relu away from kinks
  Tensor q = Tensor::zeros({6});
  for (auto& v : q.data) v = rng.uniform(0.2, 2.0) * (rng.uniform() < 0.5 ? -1 : 1);
  CHECK(finite_diff_check(
            [](Graph& g, int lf) { return g.sum_all(g.relu(lf)); }, q, 1e-5) < 1e-6);
}

TEST_CASE("all primitives match central differences at random smooth points") {
  Rng rng(3);
  double max_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Tensor p = Tensor::zeros({2, 4});
    for (auto& v : p.data) v = rng.uniform(-2.0, 2.0);
    // keep relu inputs off the kink
    for (auto& v : p.data)
      if (std::abs(v) < 0.05) v += 0.1;
    Tensor w = Tensor::zeros({3, 4});
    for (auto& v : w.data) v = rng.uniform(-1.0, 1.0);
    Tensor target = Tensor::zeros({2, 3});
    for (auto& v : target.data) v = rng.uniform(-1.0, 1.0);

    const auto build = [&](Graph& g, int lf) {
      const int wn = g.leaf(w, LeafKind::Const);
      const int bn = g.leaf(Tensor::zeros({3}), LeafKind::Const);
      const int lin = g.linear(lf, wn, bn);
      const int act = g.relu(lin);
      const int mixed = g.scale_add(0.7, act, 0.3, g.mean_broadcast(lin));
      const int tn = g.leaf(target, LeafKind::Const);
      const int a = g.mse(mixed, tn);
      const int b = g.mean_pool(g.logsumexp(g.softmax(lf)));
      const int c = g.cross_entropy(lin, {0, 2});
      const int d = g.scalar_mul(0.25, g.sum_squares(lf));
      return g.add(g.add(a, g.mean_pool(b)), g.add(c, d));
    };
    max_err = std::max(max_err, finite_diff_check(build, p, 1e-5));
  }
  CHECK(max_err < 1e-6);
}

TEST_CASE("softmax rows sum to one and are shift invariant") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor p = Tensor::zeros({3, 5});
    for (auto& v : p.data) v = rng.uniform(-4.0, 4.0);
    Graph g;
    const Tensor sm = g.value(g.softmax(g.leaf(p, LeafKind::Const)));
    for (std::size_t r = 0; r < 3; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 5; ++c) s += sm.at(r, c);
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
    Tensor shifted = p;
    for (auto& v : shifted.data) v += 7.0;
    Graph g2;
    const Tensor sm2 = g2.value(g2.softmax(g2.leaf(shifted, LeafKind::Const)));
    for (std::size_t i = 0; i < sm.size(); ++i)
      CHECK(std::abs(sm.data[i] - sm2.data[i]) < 1e-12);
  }
}

TEST_CASE("logsumexp shift identity") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor p = Tensor::zeros({6});
    for (auto& v : p.data) v = rng.uniform(-5.0, 5.0);
    Tensor q = p;
    const double c = rng.uniform(-10.0, 10.0);
    for (auto& v : q.data) v += c;
    Graph g1, g2;
    const double a = g1.value(g1.logsumexp(g1.leaf(p, LeafKind::Const))).data[0];
    const double b = g2.value(g2.logsumexp(g2.leaf(q, LeafKind::Const))).data[0];
    CHECK(std::abs(b - (a + c)) < 1e-12);
  }
}

TEST_CASE("gradient accumulates over two uses of one leaf") {
  const Tensor p({4}, {0.8, -1.2, 0.5, 1.5});
  const auto build = [](Graph& g, int lf) {
    // lf used twice: once through relu, once raw
    return g.add(g.sum_all(g.relu(lf)), g.sum_squares(lf));
  };
  CHECK(finite_diff_check(build, p, 1e-6) < 1e-6);
}

TEST_CASE("untouched leaves get zero gradients") {
  Graph g;
  const int a = g.leaf(Tensor({2}, {1.0, 2.0}), LeafKind::Weight);
  const int b = g.leaf(Tensor({2}, {3.0, 4.0}), LeafKind::Weight);
  g.backward(g.sum_all(a));
  CHECK(g.grad(b).data[0] == 0.0);
  CHECK(g.grad(b).data[1] == 0.0);
}

TEST_CASE("non-scalar loss rejected") {
  Graph g;
  const int x = g.leaf(Tensor({3}, {1, 2, 3}), LeafKind::Weight);
  CHECK_THROWS_AS(g.backward(g.relu(x)), ShapeError);
}

TEST_CASE("shape mismatch reports op and shapes") {
  Graph g;
  const int x = g.leaf(Tensor::zeros({2, 3}), LeafKind::Const);
  const int y = g.leaf(Tensor::zeros({2, 4}), LeafKind::Const);
  try {
    g.scale_add(1.0, x, 1.0, y);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("scale_add") != std::string::npos);
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[2x4]") != std::string::npos);
  }
}

TEST_CASE("relu subgradient at zero is zero") {
  Graph g;
  const int x = g.leaf(Tensor({3}, {-1.0, 0.0, 1.0}), LeafKind::Weight);
  g.backward(g.sum_all(g.relu(x)));
  CHECK(g.grad(x).data[0] == 0.0);
  CHECK(g.grad(x).data[1] == 0.0);
  CHECK(g.grad(x).data[2] == 1.0);
}
