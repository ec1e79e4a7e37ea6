#pragma once
#include <string>

#include "bdpp/graph.hpp"
#include "bdpp/rng.hpp"
#include "bdpp/searchspace.hpp"

namespace bdpp {

enum class LambdaKind { Constant, LinearIncrease, LinearDecay };

struct LambdaSchedule {
  LambdaKind kind = LambdaKind::Constant;
  double start = 0.0;
  double end = 0.0;
  int total_epochs = 1;

  // affine in the epoch, lambda(0)=start, lambda(E)=end
  double at(int epoch) const;
};

enum class AlphaRegVariant {
  None,
  L2AdamEmulated,  // update-rule penalty, F = alpha / (sum |alpha| + 1e-12)
  WeightDecay,     // update-rule penalty, F = alpha
  BetaDecay,       // loss term: mean over edges of logsumexp(alpha row)
  BetaGlobal,      // loss term: logsumexp over all alpha entries
  BetaZero,        // loss term: sum softplus(alpha), averaged per edge
};

enum class WeightRegVariant { L2, LargerL2, RandomSmoothing, Flooding };

struct AlphaRegularizer {
  AlphaRegVariant variant = AlphaRegVariant::None;
  LambdaSchedule schedule;

  bool is_loss_term() const {
    return variant == AlphaRegVariant::BetaDecay ||
           variant == AlphaRegVariant::BetaGlobal ||
           variant == AlphaRegVariant::BetaZero;
  }
};

struct WeightRegularizer {
  WeightRegVariant variant = WeightRegVariant::L2;
  double coefficient = 0.0;  // mu / phi / epsilon / flood level b
};

// Regularization loss terms, as graph nodes over an alpha leaf.
int beta_decay_loss(Graph& g, int alpha_leaf);
int beta_global_loss(Graph& g, int alpha_leaf);
int beta_zero_loss(Graph& g, int alpha_leaf);

// Loss-term node for the configured variant (alpha leaf must be [E x K]).
int alpha_reg_loss(Graph& g, int alpha_leaf, AlphaRegVariant variant);

// The F mapping of the unified single-step update, applied to one alpha row.
std::vector<double> alpha_reg_mapping(const std::vector<double>& alpha_row,
                                      AlphaRegVariant variant);

// One explicit update: alpha <- alpha - eta*data_grad - eta*lambda*F(alpha).
// data_grad may be empty (treated as zero).
Tensor alpha_penalty_step(const Tensor& alpha, AlphaRegVariant variant,
                          double lambda, double eta, const Tensor& data_grad);

// Wraps the raw training-loss node according to the weight regularizer.
// For L2/LargerL2 the caller supplies the sum-of-squares node of all weights.
int apply_weight_regularizer(Graph& g, int train_loss, WeightRegVariant variant,
                             double coefficient, int weights_sumsq_node);

// Random-smoothing perturbation of alpha for one w step: returns the
// perturbed copy; caller restores the original afterwards. eps == 0 draws
// nothing and returns alpha unchanged.
Tensor smoothed_alpha(const Tensor& alpha, double eps, Rng& rng);

std::string to_string(AlphaRegVariant v);
std::string to_string(WeightRegVariant v);
std::string to_string(LambdaKind k);

}  // namespace bdpp
