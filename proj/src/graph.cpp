#include "bdpp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bdpp {
namespace {

const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Linear: return "linear";
    case OpKind::Relu: return "relu";
    case OpKind::ScaleAdd: return "scale_add";
    case OpKind::MeanPool: return "mean_pool";
    case OpKind::MeanBroadcast: return "mean_broadcast";
    case OpKind::Softmax: return "softmax";
    case OpKind::LogSumExp: return "logsumexp";
    case OpKind::LogSumExpAll: return "logsumexp_all";
    case OpKind::Softplus: return "softplus";
    case OpKind::SumAll: return "sum_all";
    case OpKind::CrossEntropy: return "cross_entropy";
    case OpKind::Mse: return "mse";
    case OpKind::ScaleEntry: return "scale_entry";
    case OpKind::ScalarMul: return "scalar_mul";
    case OpKind::Flood: return "flood";
    case OpKind::SumSquares: return "sum_squares";
  }
  return "?";
}

[[noreturn]] void shape_fail(OpKind op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op_name(op)) + ": shape mismatch " +
                   a.shape_str() + " vs " + b.shape_str());
}

// rows/cols view: rank-1 tensors are a single row
std::size_t view_rows(const Tensor& t) {
  return t.shape.size() == 2 ? t.shape[0] : 1;
}
std::size_t view_cols(const Tensor& t) {
  return t.shape.size() == 2 ? t.shape[1] : t.size();
}

double stable_lse(const double* v, std::size_t n) {
  double m = v[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, v[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

void stable_softmax(const double* v, std::size_t n, double* out) {
  double m = v[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, v[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(v[i] - m);
    s += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= s;
}

}  // namespace

int Graph::push(Node n) {
  forward_node(n);
  n.grad = Tensor::zeros(n.value.shape);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Graph::leaf(Tensor t, LeafKind kind) {
  Node n;
  n.op = OpKind::Leaf;
  n.leaf_kind = kind;
  n.value = std::move(t);
  return push(std::move(n));
}

int Graph::linear(int x, int w, int bias) {
  Node n;
  n.op = OpKind::Linear;
  n.in = {x, w, bias};
  return push(std::move(n));
}

int Graph::relu(int x) {
  Node n;
  n.op = OpKind::Relu;
  n.in = {x, -1, -1};
  return push(std::move(n));
}

int Graph::scale_add(double a, int x, double b, int y) {
  Node n;
  n.op = OpKind::ScaleAdd;
  n.in = {x, y, -1};
  n.a = a;
  n.b = b;
  return push(std::move(n));
}

int Graph::mean_pool(int x) {
  Node n;
  n.op = OpKind::MeanPool;
  n.in = {x, -1, -1};
  return push(std::move(n));
}

int Graph::mean_broadcast(int x) {
  Node n;
  n.op = OpKind::MeanBroadcast;
  n.in = {x, -1, -1};
  return push(std::move(n));
}

int Graph::softmax(int x) {
  Node n;
  n.op = OpKind::Softmax;
  n.in = {x, -1, -1};
  return push(std::move(n));
}

int Graph::logsumexp(int x) {
  Node n;
  n.op = OpKind::LogSumExp;
  n.in = {x, -1, -1};
  return push(std::move(n));
}

int Graph::logsumexp_all(int x) {
  Node n;
  n.op = OpKind::LogSumExpAll;
  n.in = {x, -1, -1};
  return push(std::move(n));
}

int Graph::softplus(int x) {
  Node n;
  n.op = OpKind::Softplus;
  n.in = {x, -1, -1};
  return push(std::move(n));
}

int Graph::sum_all(int x) {
  Node n;
  n.op = OpKind::SumAll;
  n.in = {x, -1, -1};
  return push(std::move(n));
}

int Graph::cross_entropy(int logits, std::vector<int> labels) {
  Node n;
  n.op = OpKind::CrossEntropy;
  n.in = {logits, -1, -1};
  n.labels = std::move(labels);
  return push(std::move(n));
}

int Graph::mse(int pred, int target) {
  Node n;
  n.op = OpKind::Mse;
  n.in = {pred, target, -1};
  return push(std::move(n));
}

int Graph::scale_entry(int m, std::size_t r, std::size_t c, int x) {
  Node n;
  n.op = OpKind::ScaleEntry;
  n.in = {m, x, -1};
  n.r = r;
  n.c = c;
  return push(std::move(n));
}

int Graph::scalar_mul(double c, int x) {
  Node n;
  n.op = OpKind::ScalarMul;
  n.in = {x, -1, -1};
  n.a = c;
  return push(std::move(n));
}

int Graph::flood(int x, double level) {
  Node n;
  n.op = OpKind::Flood;
  n.in = {x, -1, -1};
  n.a = level;
  return push(std::move(n));
}

int Graph::sum_squares(int x) {
  Node n;
  n.op = OpKind::SumSquares;
  n.in = {x, -1, -1};
  return push(std::move(n));
}

void Graph::forward_node(Node& n) {
  switch (n.op) {
    case OpKind::Leaf:
      break;
    case OpKind::Linear: {
      const Tensor& x = at(n.in[0]).value;
      const Tensor& w = at(n.in[1]).value;
      const Tensor& b = at(n.in[2]).value;
      if (x.shape.size() != 2 || w.shape.size() != 2 || x.cols() != w.cols())
        shape_fail(n.op, x, w);
      if (b.size() != w.rows()) shape_fail(n.op, w, b);
      const std::size_t B = x.rows(), Din = x.cols(), Dout = w.rows();
      n.value = Tensor::zeros({B, Dout});
      for (std::size_t i = 0; i < B; ++i)
        for (std::size_t j = 0; j < Dout; ++j) {
          double s = b.at(j);
          for (std::size_t d = 0; d < Din; ++d) s += x.at(i, d) * w.at(j, d);
          n.value.at(i, j) = s;
        }
      break;
    }
    case OpKind::Relu: {
      const Tensor& x = at(n.in[0]).value;
      n.value = x;
      for (auto& v : n.value.data) v = v > 0.0 ? v : 0.0;
      break;
    }
    case OpKind::ScaleAdd: {
      const Tensor& x = at(n.in[0]).value;
      const Tensor& y = at(n.in[1]).value;
      if (!same_shape(x, y)) shape_fail(n.op, x, y);
      n.value = Tensor::zeros(x.shape);
      for (std::size_t i = 0; i < x.size(); ++i)
        n.value.data[i] = n.a * x.data[i] + n.b * y.data[i];
      break;
    }
    case OpKind::MeanPool: {
      const Tensor& x = at(n.in[0]).value;
      const std::size_t R = view_rows(x), C = view_cols(x);
      n.value = Tensor::zeros({R});
      for (std::size_t i = 0; i < R; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < C; ++j) s += x.data[i * C + j];
        n.value.data[i] = s / static_cast<double>(C);
      }
      break;
    }
    case OpKind::MeanBroadcast: {
      const Tensor& x = at(n.in[0]).value;
      const std::size_t R = view_rows(x), C = view_cols(x);
      n.value = Tensor::zeros(x.shape);
      for (std::size_t i = 0; i < R; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < C; ++j) s += x.data[i * C + j];
        s /= static_cast<double>(C);
        for (std::size_t j = 0; j < C; ++j) n.value.data[i * C + j] = s;
      }
      break;
    }
    case OpKind::Softmax: {
      const Tensor& x = at(n.in[0]).value;
      const std::size_t R = view_rows(x), C = view_cols(x);
      n.value = Tensor::zeros(x.shape);
      for (std::size_t i = 0; i < R; ++i)
        stable_softmax(&x.data[i * C], C, &n.value.data[i * C]);
      break;
    }
    case OpKind::LogSumExp: {
      const Tensor& x = at(n.in[0]).value;
      const std::size_t R = view_rows(x), C = view_cols(x);
      n.value = Tensor::zeros({R});
      for (std::size_t i = 0; i < R; ++i)
        n.value.data[i] = stable_lse(&x.data[i * C], C);
      break;
    }
    case OpKind::LogSumExpAll: {
      const Tensor& x = at(n.in[0]).value;
      n.value = Tensor::scalar(stable_lse(x.data.data(), x.size()));
      break;
    }
    case OpKind::Softplus: {
      const Tensor& x = at(n.in[0]).value;
      n.value = Tensor::zeros(x.shape);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x.data[i];
        n.value.data[i] = v > 0.0 ? v + std::log1p(std::exp(-v))
                                  : std::log1p(std::exp(v));
      }
      break;
    }
    case OpKind::SumAll: {
      const Tensor& x = at(n.in[0]).value;
      double s = 0.0;
      for (double v : x.data) s += v;
      n.value = Tensor::scalar(s);
      break;
    }
    case OpKind::CrossEntropy: {
      const Tensor& x = at(n.in[0]).value;
      if (x.shape.size() != 2 || x.rows() != n.labels.size())
        throw ShapeError("cross_entropy: logits " + x.shape_str() + " vs " +
                         std::to_string(n.labels.size()) + " labels");
      const std::size_t B = x.rows(), C = x.cols();
      double s = 0.0;
      for (std::size_t i = 0; i < B; ++i) {
        const int lab = n.labels[i];
        if (lab < 0 || static_cast<std::size_t>(lab) >= C)
          throw ShapeError("cross_entropy: label out of range");
        s += stable_lse(&x.data[i * C], C) - x.at(i, static_cast<std::size_t>(lab));
      }
      n.value = Tensor::scalar(s / static_cast<double>(B));
      break;
    }
    case OpKind::Mse: {
      const Tensor& p = at(n.in[0]).value;
      const Tensor& t = at(n.in[1]).value;
      if (!same_shape(p, t)) shape_fail(n.op, p, t);
      double s = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p.data[i] - t.data[i];
        s += d * d;
      }
      n.value = Tensor::scalar(s / static_cast<double>(p.size()));
      break;
    }
    case OpKind::ScaleEntry: {
      const Tensor& m = at(n.in[0]).value;
      const Tensor& x = at(n.in[1]).value;
      const double c = m.at(n.r, n.c);
      n.value = Tensor::zeros(x.shape);
      for (std::size_t i = 0; i < x.size(); ++i) n.value.data[i] = c * x.data[i];
      break;
    }
    case OpKind::ScalarMul: {
      const Tensor& x = at(n.in[0]).value;
      n.value = Tensor::zeros(x.shape);
      for (std::size_t i = 0; i < x.size(); ++i) n.value.data[i] = n.a * x.data[i];
      break;
    }
    case OpKind::Flood: {
      const Tensor& x = at(n.in[0]).value;
      if (!x.is_scalar()) throw ShapeError("flood: input must be scalar");
      n.value = Tensor::scalar(std::abs(x.data[0] - n.a) + n.a);
      break;
    }
    case OpKind::SumSquares: {
      const Tensor& x = at(n.in[0]).value;
      double s = 0.0;
      for (double v : x.data) s += v * v;
      n.value = Tensor::scalar(s);
      break;
    }
  }
}

void Graph::backward_node(Node& n) {
  const Tensor& g = n.grad;
  switch (n.op) {
    case OpKind::Leaf:
      break;
    case OpKind::Linear: {
      Node& xn = at(n.in[0]);
      Node& wn = at(n.in[1]);
      Node& bn = at(n.in[2]);
      const Tensor& x = xn.value;
      const Tensor& w = wn.value;
      const std::size_t B = x.rows(), Din = x.cols(), Dout = w.rows();
      for (std::size_t i = 0; i < B; ++i)
        for (std::size_t j = 0; j < Dout; ++j) {
          const double gij = g.at(i, j);
          if (gij == 0.0) continue;
          for (std::size_t d = 0; d < Din; ++d) {
            xn.grad.at(i, d) += gij * w.at(j, d);
            wn.grad.at(j, d) += gij * x.at(i, d);
          }
          bn.grad.at(j) += gij;
        }
      break;
    }
    case OpKind::Relu: {
      Node& xn = at(n.in[0]);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (xn.value.data[i] > 0.0) xn.grad.data[i] += g.data[i];
      break;
    }
    case OpKind::ScaleAdd: {
      Node& xn = at(n.in[0]);
      Node& yn = at(n.in[1]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        xn.grad.data[i] += n.a * g.data[i];
        yn.grad.data[i] += n.b * g.data[i];
      }
      break;
    }
    case OpKind::MeanPool: {
      Node& xn = at(n.in[0]);
      const std::size_t R = view_rows(xn.value), C = view_cols(xn.value);
      for (std::size_t i = 0; i < R; ++i) {
        const double gi = g.data[i] / static_cast<double>(C);
        for (std::size_t j = 0; j < C; ++j) xn.grad.data[i * C + j] += gi;
      }
      break;
    }
    case OpKind::MeanBroadcast: {
      Node& xn = at(n.in[0]);
      const std::size_t R = view_rows(xn.value), C = view_cols(xn.value);
      for (std::size_t i = 0; i < R; ++i) {
        double gs = 0.0;
        for (std::size_t j = 0; j < C; ++j) gs += g.data[i * C + j];
        gs /= static_cast<double>(C);
        for (std::size_t j = 0; j < C; ++j) xn.grad.data[i * C + j] += gs;
      }
      break;
    }
    case OpKind::Softmax: {
      Node& xn = at(n.in[0]);
      const std::size_t R = view_rows(xn.value), C = view_cols(xn.value);
      for (std::size_t i = 0; i < R; ++i) {
        const double* y = &n.value.data[i * C];
        const double* gi = &g.data[i * C];
        double dot = 0.0;
        for (std::size_t j = 0; j < C; ++j) dot += gi[j] * y[j];
        for (std::size_t j = 0; j < C; ++j)
          xn.grad.data[i * C + j] += y[j] * (gi[j] - dot);
      }
      break;
    }
    case OpKind::LogSumExp: {
      Node& xn = at(n.in[0]);
      const std::size_t R = view_rows(xn.value), C = view_cols(xn.value);
      std::vector<double> sm(C);
      for (std::size_t i = 0; i < R; ++i) {
        stable_softmax(&xn.value.data[i * C], C, sm.data());
        for (std::size_t j = 0; j < C; ++j)
          xn.grad.data[i * C + j] += g.data[i] * sm[j];
      }
      break;
    }
    case OpKind::LogSumExpAll: {
      Node& xn = at(n.in[0]);
      std::vector<double> sm(xn.value.size());
      stable_softmax(xn.value.data.data(), xn.value.size(), sm.data());
      for (std::size_t i = 0; i < sm.size(); ++i)
        xn.grad.data[i] += g.data[0] * sm[i];
      break;
    }
    case OpKind::Softplus: {
      Node& xn = at(n.in[0]);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = xn.value.data[i];
        xn.grad.data[i] += g.data[i] / (1.0 + std::exp(-v));
      }
      break;
    }
    case OpKind::SumAll: {
      Node& xn = at(n.in[0]);
      for (auto& gv : xn.grad.data) gv += g.data[0];
      break;
    }
    case OpKind::CrossEntropy: {
      Node& xn = at(n.in[0]);
      const std::size_t B = xn.value.rows(), C = xn.value.cols();
      std::vector<double> sm(C);
      for (std::size_t i = 0; i < B; ++i) {
        stable_softmax(&xn.value.data[i * C], C, sm.data());
        for (std::size_t j = 0; j < C; ++j) {
          double d = sm[j];
          if (static_cast<int>(j) == n.labels[i]) d -= 1.0;
          xn.grad.data[i * C + j] += g.data[0] * d / static_cast<double>(B);
        }
      }
      break;
    }
    case OpKind::Mse: {
      Node& pn = at(n.in[0]);
      Node& tn = at(n.in[1]);
      const double scale = 2.0 * g.data[0] / static_cast<double>(pn.value.size());
      for (std::size_t i = 0; i < pn.value.size(); ++i) {
        const double d = pn.value.data[i] - tn.value.data[i];
        pn.grad.data[i] += scale * d;
        tn.grad.data[i] -= scale * d;
      }
      break;
    }
    case OpKind::ScaleEntry: {
      Node& mn = at(n.in[0]);
      Node& xn = at(n.in[1]);
      const double c = mn.value.at(n.r, n.c);
      double dot = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        xn.grad.data[i] += c * g.data[i];
        dot += g.data[i] * xn.value.data[i];
      }
      mn.grad.at(n.r, n.c) += dot;
      break;
    }
    case OpKind::ScalarMul: {
      Node& xn = at(n.in[0]);
      for (std::size_t i = 0; i < g.size(); ++i) xn.grad.data[i] += n.a * g.data[i];
      break;
    }
    case OpKind::Flood: {
      Node& xn = at(n.in[0]);
      const double sgn = xn.value.data[0] >= n.a ? 1.0 : -1.0;
      xn.grad.data[0] += sgn * g.data[0];
      break;
    }
    case OpKind::SumSquares: {
      Node& xn = at(n.in[0]);
      for (std::size_t i = 0; i < xn.value.size(); ++i)
        xn.grad.data[i] += 2.0 * xn.value.data[i] * g.data[0];
      break;
    }
  }
}

void Graph::backward(int loss) {
  Node& ln = at(loss);
  if (!ln.value.is_scalar())
    throw ShapeError("backward: loss must be scalar, got " + ln.value.shape_str());
  for (auto& n : nodes_) std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
  ln.grad.data[0] = 1.0;
  for (int i = loss; i >= 0; --i) backward_node(nodes_[static_cast<std::size_t>(i)]);
}

double finite_diff_check(const std::function<int(Graph&, int)>& build,
                         const Tensor& point, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: h must be > 0");

  auto eval = [&](const Tensor& p, Tensor* grad_out) {
    Graph g;
    const int leaf = g.leaf(p, LeafKind::Weight);
    const int loss = build(g, leaf);
    if (!g.value(loss).is_scalar())
      throw ShapeError("finite_diff_check: function is not scalar-valued");
    const double v = g.value(loss).data[0];
    if (!std::isfinite(v))
      throw std::runtime_error("finite_diff_check: non-finite evaluation");
    if (grad_out != nullptr) {
      g.backward(loss);
      *grad_out = g.grad(leaf);
    }
    return v;
  };

  Tensor g_ad;
  eval(point, &g_ad);

  double max_err = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    Tensor p = point;
    p.data[i] += h;
    const double fp = eval(p, nullptr);
    p.data[i] -= 2.0 * h;
    const double fm = eval(p, nullptr);
    const double g_fd = (fp - fm) / (2.0 * h);
    if (!std::isfinite(g_fd))
      throw std::runtime_error("finite_diff_check: non-finite difference");
    const double err = std::abs(g_ad.data[i] - g_fd) / std::max(1.0, std::abs(g_fd));
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace bdpp
