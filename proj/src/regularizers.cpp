#include "bdpp/regularizers.hpp"

#include <cmath>
#include <stdexcept>

namespace bdpp {

double LambdaSchedule::at(int epoch) const {
  if (kind == LambdaKind::Constant) return start;
  const double t = total_epochs > 0
                       ? static_cast<double>(epoch) / static_cast<double>(total_epochs)
                       : 0.0;
  return start + (end - start) * t;
}

int beta_decay_loss(Graph& g, int alpha_leaf) {
  return g.mean_pool(g.logsumexp(alpha_leaf));
}

int beta_global_loss(Graph& g, int alpha_leaf) {
  return g.logsumexp_all(alpha_leaf);
}

int beta_zero_loss(Graph& g, int alpha_leaf) {
  const std::size_t num_edges = g.value(alpha_leaf).rows();
  return g.scalar_mul(1.0 / static_cast<double>(num_edges),
                      g.sum_all(g.softplus(alpha_leaf)));
}

int alpha_reg_loss(Graph& g, int alpha_leaf, AlphaRegVariant variant) {
  switch (variant) {
    case AlphaRegVariant::BetaDecay: return beta_decay_loss(g, alpha_leaf);
    case AlphaRegVariant::BetaGlobal: return beta_global_loss(g, alpha_leaf);
    case AlphaRegVariant::BetaZero: return beta_zero_loss(g, alpha_leaf);
    default:
      throw std::invalid_argument("alpha_reg_loss: variant is not a loss term");
  }
}

std::vector<double> alpha_reg_mapping(const std::vector<double>& row,
                                      AlphaRegVariant variant) {
  std::vector<double> f(row.size(), 0.0);
  switch (variant) {
    case AlphaRegVariant::None:
      break;
    case AlphaRegVariant::L2AdamEmulated: {
      double mag = 0.0;
      for (double v : row) mag += std::abs(v);
      for (std::size_t i = 0; i < row.size(); ++i) f[i] = row[i] / (mag + 1e-12);
      break;
    }
    case AlphaRegVariant::WeightDecay:
      f = row;
      break;
    case AlphaRegVariant::BetaDecay: {
      double m = row[0];
      for (double v : row) m = std::max(m, v);
      double s = 0.0;
      for (std::size_t i = 0; i < row.size(); ++i) {
        f[i] = std::exp(row[i] - m);
        s += f[i];
      }
      for (auto& v : f) v /= s;
      break;
    }
    default:
      throw std::invalid_argument(
          "alpha_reg_mapping: variant has no per-row F mapping");
  }
  return f;
}

Tensor alpha_penalty_step(const Tensor& alpha, AlphaRegVariant variant,
                          double lambda, double eta, const Tensor& data_grad) {
  if (lambda < 0.0 || eta < 0.0)
    throw std::invalid_argument("alpha_penalty_step: lambda, eta must be >= 0");
  if (data_grad.size() > 0 && !same_shape(alpha, data_grad))
    throw ShapeError("alpha_penalty_step: grad shape " + data_grad.shape_str() +
                     " vs alpha " + alpha.shape_str());
  const std::size_t E = alpha.rows(), K = alpha.cols();
  Tensor out = alpha;
  for (std::size_t e = 0; e < E; ++e) {
    std::vector<double> row(K);
    for (std::size_t k = 0; k < K; ++k) row[k] = alpha.at(e, k);
    const auto f = alpha_reg_mapping(row, variant);
    for (std::size_t k = 0; k < K; ++k) {
      double step = eta * lambda * f[k];
      if (data_grad.size() > 0) step += eta * data_grad.at(e, k);
      out.at(e, k) -= step;
    }
  }
  return out;
}

int apply_weight_regularizer(Graph& g, int train_loss, WeightRegVariant variant,
                             double coefficient, int weights_sumsq_node) {
  if (coefficient < 0.0)
    throw std::invalid_argument("weight regularizer: coefficient must be >= 0");
  switch (variant) {
    case WeightRegVariant::L2:
    case WeightRegVariant::LargerL2:
      if (coefficient == 0.0) return train_loss;
      return g.add(train_loss, g.scalar_mul(coefficient, weights_sumsq_node));
    case WeightRegVariant::RandomSmoothing:
      return train_loss;  // perturbation handled via smoothed_alpha
    case WeightRegVariant::Flooding:
      return g.flood(train_loss, coefficient);
  }
  return train_loss;
}

Tensor smoothed_alpha(const Tensor& alpha, double eps, Rng& rng) {
  if (eps == 0.0) return alpha;
  Tensor out = alpha;
  for (auto& v : out.data) v += rng.uniform(-eps, eps);
  return out;
}

std::string to_string(AlphaRegVariant v) {
  switch (v) {
    case AlphaRegVariant::None: return "none";
    case AlphaRegVariant::L2AdamEmulated: return "l2_adam_emulated";
    case AlphaRegVariant::WeightDecay: return "weight_decay";
    case AlphaRegVariant::BetaDecay: return "beta_decay";
    case AlphaRegVariant::BetaGlobal: return "beta_global";
    case AlphaRegVariant::BetaZero: return "beta_zero";
  }
  return "?";
}

std::string to_string(WeightRegVariant v) {
  switch (v) {
    case WeightRegVariant::L2: return "l2";
    case WeightRegVariant::LargerL2: return "larger_l2";
    case WeightRegVariant::RandomSmoothing: return "random_smoothing";
    case WeightRegVariant::Flooding: return "flooding";
  }
  return "?";
}

std::string to_string(LambdaKind k) {
  switch (k) {
    case LambdaKind::Constant: return "constant";
    case LambdaKind::LinearIncrease: return "linear_increase";
    case LambdaKind::LinearDecay: return "linear_decay";
  }
  return "?";
}

}  // namespace bdpp
