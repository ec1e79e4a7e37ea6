#pragma once
#include <map>
#include <utility>
#include <vector>

#include "bdpp/regularizers.hpp"
#include "bdpp/searchspace.hpp"

namespace bdpp {

struct ThetaReport {
  std::vector<double> theta;
  AlphaRegVariant variant;
  double lambda_eta;
  double max_deviation;  // closed form vs simulated
};

// theta_k = beta_bar / beta after one regularized vs unregularized alpha
// step, evaluated from the closed-form ratio. `data_grad_step` is the
// eta-scaled data gradient (may be empty, treated as zero).
std::vector<double> theta_closed_form(const std::vector<double>& alpha_row,
                                      AlphaRegVariant variant, double lambda_eta,
                                      const std::vector<double>& data_grad_step = {});

// Independent oracle: run both single-step updates, softmax each, divide.
std::vector<double> theta_simulated(const std::vector<double>& alpha_row,
                                    AlphaRegVariant variant, double lambda_eta,
                                    const std::vector<double>& data_grad_step = {});

ThetaReport theta_report(const std::vector<double>& alpha_row,
                         AlphaRegVariant variant, double lambda_eta,
                         const std::vector<double>& data_grad_step = {});

// Per-edge ||beta||_2 plus the total over edges.
struct LipschitzMeasure {
  std::vector<double> per_edge;
  double total;
};
LipschitzMeasure lipschitz_measure(const ArchParams& arch);

// Convergence factor: sum over i of (beta_conv(i,h-1))^2 * prod_t (beta_skip(t,i))^2.
// Keys are (from, to) node pairs; proportionality constant taken as 1.
using EdgeBetaMap = std::map<std::pair<int, int>, double>;
double phi_convergence(const EdgeBetaMap& beta_conv, const EdgeBetaMap& beta_skip,
                       int h);

// Descent-then-ascent pair vs the second-order prediction
// w - eta^2/2 * d/dw ||g||^2. Derivatives supplied analytically.
struct ScalarLoss {
  std::function<double(double)> value;
  std::function<double(double)> grad;
  std::function<double(double)> grad2;
};
struct FloodingTaylorResult {
  double simulated_w2;
  double predicted_w2;
  double error;
};
FloodingTaylorResult flooding_taylor_check(const ScalarLoss& loss, double w0,
                                           double eta, double b);

// Exact order statistics of one alpha row (population std).
struct RowStats {
  double mean, median, std;
};
RowStats row_stats(const std::vector<double>& row);
std::vector<RowStats> alpha_stats(const Tensor& alpha);

// ---- verification suites (used by `verify` and the mutation tests) ----

struct SuiteResult {
  std::string name;
  bool passed;
  std::string detail;
};

std::vector<SuiteResult> verify_beta_grad(bool inject_sign_flip = false);
std::vector<SuiteResult> verify_theta();
std::vector<SuiteResult> verify_flooding();
std::vector<SuiteResult> verify_criteria();
std::vector<SuiteResult> verify_lipschitz();
std::vector<SuiteResult> verify_all();

}  // namespace bdpp
