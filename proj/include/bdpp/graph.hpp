#pragma once
#include <array>
#include <functional>
#include <vector>

#include "bdpp/tensor.hpp"

namespace bdpp {

enum class LeafKind { Alpha, Weight, Const, Input };

enum class OpKind {
  Leaf,
  Linear,        // y = x W^T + b,  x:[B,Din] W:[Dout,Din] b:[Dout]
  Relu,
  ScaleAdd,      // a*x + b*y elementwise
  MeanPool,      // mean over last axis
  MeanBroadcast, // per-row mean broadcast back over the row
  Softmax,       // over last axis
  LogSumExp,     // over last axis
  LogSumExpAll,  // over all entries -> scalar
  Softplus,      // log(1 + e^x) elementwise, stable
  SumAll,        // sum of all entries -> scalar
  CrossEntropy,  // mean over batch of (lse(row) - row[label])
  Mse,           // mean of squared elementwise difference
  ScaleEntry,    // m[r,c] * x
  ScalarMul,     // c * x
  Flood,         // |x - b| + b on a scalar
  SumSquares,    // sum of squares -> scalar
};

// Reverse-mode tape over Tensor values. Forward values are computed eagerly
// as nodes are recorded; the tape is rebuilt each optimization step.
class Graph {
 public:
  struct Node {
    OpKind op;
    LeafKind leaf_kind = LeafKind::Const;
    std::array<int, 3> in{-1, -1, -1};
    double a = 0.0, b = 0.0;        // scalar coefficients
    std::size_t r = 0, c = 0;       // ScaleEntry indices
    std::vector<int> labels;        // CrossEntropy class labels
    Tensor value;
    Tensor grad;
  };

  int leaf(Tensor t, LeafKind kind);
  int linear(int x, int w, int bias);
  int relu(int x);
  int scale_add(double a, int x, double b, int y);
  int add(int x, int y) { return scale_add(1.0, x, 1.0, y); }
  int mean_pool(int x);
  int mean_broadcast(int x);
  int softmax(int x);
  int logsumexp(int x);
  int logsumexp_all(int x);
  int softplus(int x);
  int sum_all(int x);
  int cross_entropy(int logits, std::vector<int> labels);
  int mse(int pred, int target);
  int scale_entry(int m, std::size_t r, std::size_t c, int x);
  int scalar_mul(double c, int x);
  int flood(int x, double level);
  int sum_squares(int x);

  const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Tensor& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  LeafKind leaf_kind(int id) const { return nodes_[static_cast<std::size_t>(id)].leaf_kind; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Accumulates adjoints into every node's grad; loss must be scalar.
  void backward(int loss);

 private:
  int push(Node n);
  void forward_node(Node& n);
  void backward_node(Node& n);
  Node& at(int id) { return nodes_[static_cast<std::size_t>(id)]; }

  std::vector<Node> nodes_;
};

// Max relative error between the tape gradient and central finite
// differences of a scalar function built on a fresh graph per evaluation.
// `build` receives the graph and the id of the parameter leaf.
double finite_diff_check(const std::function<int(Graph&, int)>& build,
                         const Tensor& point, double h);

}  // namespace bdpp
