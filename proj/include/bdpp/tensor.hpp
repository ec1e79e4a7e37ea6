#pragma once
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdpp {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense row-major tensor of doubles. Rank 1 or 2 is all the supernet needs;
// scalars are rank-1 tensors of size 1.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (count(shape) != data.size())
      throw ShapeError("tensor: shape/data size mismatch");
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    std::size_t n = count(s);
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  std::size_t size() const { return data.size(); }
  bool is_scalar() const { return data.size() == 1; }

  std::size_t rows() const {
    if (shape.size() != 2) throw ShapeError("tensor: rows() on non-matrix");
    return shape[0];
  }
  std::size_t cols() const {
    if (shape.size() != 2) throw ShapeError("tensor: cols() on non-matrix");
    return shape[1];
  }

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

inline bool same_shape(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape;
}

}  // namespace bdpp
