#include "bdpp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bdpp/bilevel.hpp"
#include "bdpp/rng.hpp"

namespace bdpp {

namespace {

std::vector<double> softmax_vec(const std::vector<double>& v) {
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  std::vector<double> out(v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    s += out[i];
  }
  for (auto& x : out) x /= s;
  return out;
}

std::vector<double> unregularized_update(const std::vector<double>& alpha,
                                         const std::vector<double>& step) {
  std::vector<double> a1 = alpha;
  if (!step.empty()) {
    if (step.size() != alpha.size())
      throw std::invalid_argument("theta: grad size mismatch");
    for (std::size_t i = 0; i < a1.size(); ++i) a1[i] -= step[i];
  }
  return a1;
}

}  // namespace

std::vector<double> theta_closed_form(const std::vector<double>& alpha_row,
                                      AlphaRegVariant variant, double lambda_eta,
                                      const std::vector<double>& data_grad_step) {
  if (lambda_eta < 0.0)
    throw std::invalid_argument("theta: lambda_eta must be >= 0");
  const std::size_t K = alpha_row.size();
  const auto f = alpha_reg_mapping(alpha_row, variant);
  const auto a1 = unregularized_update(alpha_row, data_grad_step);
  double m = a1[0];
  for (double v : a1) m = std::max(m, v);
  double numer = 0.0;
  for (std::size_t k = 0; k < K; ++k) numer += std::exp(a1[k] - m);
  std::vector<double> theta(K);
  for (std::size_t k = 0; k < K; ++k) {
    double denom = 0.0;
    for (std::size_t kp = 0; kp < K; ++kp)
      denom += std::pow(std::exp(f[k] - f[kp]), lambda_eta) * std::exp(a1[kp] - m);
    theta[k] = numer / denom;
  }
  return theta;
}

std::vector<double> theta_simulated(const std::vector<double>& alpha_row,
                                    AlphaRegVariant variant, double lambda_eta,
                                    const std::vector<double>& data_grad_step) {
  if (lambda_eta < 0.0)
    throw std::invalid_argument("theta: lambda_eta must be >= 0");
  const auto f = alpha_reg_mapping(alpha_row, variant);
  const auto a1 = unregularized_update(alpha_row, data_grad_step);
  std::vector<double> abar = a1;
  for (std::size_t i = 0; i < abar.size(); ++i) abar[i] -= lambda_eta * f[i];
  const auto beta_bar = softmax_vec(abar);
  const auto beta = softmax_vec(a1);
  std::vector<double> theta(alpha_row.size());
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = beta_bar[i] / beta[i];
  return theta;
}

ThetaReport theta_report(const std::vector<double>& alpha_row,
                         AlphaRegVariant variant, double lambda_eta,
                         const std::vector<double>& data_grad_step) {
  ThetaReport r;
  r.variant = variant;
  r.lambda_eta = lambda_eta;
  r.theta = theta_closed_form(alpha_row, variant, lambda_eta, data_grad_step);
  const auto sim = theta_simulated(alpha_row, variant, lambda_eta, data_grad_step);
  r.max_deviation = 0.0;
  for (std::size_t i = 0; i < sim.size(); ++i)
    r.max_deviation = std::max(
        r.max_deviation, std::abs(r.theta[i] - sim[i]) / std::max(1e-300, std::abs(sim[i])));
  return r;
}

LipschitzMeasure lipschitz_measure(const ArchParams& arch) {
  const Tensor beta = beta_of_alpha(arch);
  LipschitzMeasure out;
  out.total = 0.0;
  for (std::size_t e = 0; e < beta.rows(); ++e) {
    double s = 0.0;
    for (std::size_t k = 0; k < beta.cols(); ++k) s += beta.at(e, k) * beta.at(e, k);
    out.per_edge.push_back(std::sqrt(s));
    out.total += out.per_edge.back();
  }
  return out;
}

double phi_convergence(const EdgeBetaMap& beta_conv, const EdgeBetaMap& beta_skip,
                       int h) {
  if (h < 2) throw std::invalid_argument("phi: h must be >= 2");
  auto get = [](const EdgeBetaMap& m, int from, int to, const char* what) {
    const auto it = m.find({from, to});
    if (it == m.end()) {
      std::ostringstream os;
      os << "phi: missing " << what << " edge (" << from << "," << to << ")";
      throw std::invalid_argument(os.str());
    }
    return it->second;
  };
  double phi = 0.0;
  for (int i = 0; i <= h - 2; ++i) {
    const double bc = get(beta_conv, i, h - 1, "conv");
    double term = bc * bc;
    for (int t = 0; t <= i - 1; ++t) {
      const double bs = get(beta_skip, t, i, "skip");
      term *= bs * bs;
    }
    phi += term;
  }
  return phi;
}

FloodingTaylorResult flooding_taylor_check(const ScalarLoss& loss, double w0,
                                           double eta, double /*b*/) {
  // descent then ascent
  const double w1 = w0 - eta * loss.grad(w0);
  const double w2 = w1 + eta * loss.grad(w1);
  // w0 - eta^2/2 * d/dw ||g||^2 = w0 - eta^2 * g'(w0) g(w0)
  const double pred = w0 - eta * eta * loss.grad2(w0) * loss.grad(w0);
  return {w2, pred, std::abs(w2 - pred)};
}

RowStats row_stats(const std::vector<double>& row) {
  RowStats s{0.0, 0.0, 0.0};
  const double n = static_cast<double>(row.size());
  for (double v : row) s.mean += v;
  s.mean /= n;
  for (double v : row) s.std += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(s.std / n);
  std::vector<double> sorted = row;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t k = sorted.size();
  s.median = k % 2 == 1 ? sorted[k / 2]
                        : 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);
  return s;
}

std::vector<RowStats> alpha_stats(const Tensor& alpha) {
  std::vector<RowStats> out;
  for (std::size_t e = 0; e < alpha.rows(); ++e) {
    std::vector<double> row(alpha.cols());
    for (std::size_t k = 0; k < alpha.cols(); ++k) row[k] = alpha.at(e, k);
    out.push_back(row_stats(row));
  }
  return out;
}

// ---------------------------------------------------------------- suites

namespace {

SuiteResult check(const std::string& name, bool ok, const std::string& detail = "") {
  return {name, ok, detail};
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<SuiteResult> verify_beta_grad(bool inject_sign_flip) {
  Rng rng(42);
  double max_closed = 0.0, max_fd = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t E = 1 + rng.below(6), K = 2 + rng.below(7);
    Tensor alpha = Tensor::zeros({E, K});
    for (auto& v : alpha.data) v = rng.uniform(-3.0, 3.0);

    Graph g;
    const int leaf = g.leaf(alpha, LeafKind::Alpha);
    g.backward(beta_decay_loss(g, leaf));
    Tensor grad = g.grad(leaf);
    if (inject_sign_flip)
      for (auto& v : grad.data) v = -v;

    // closed form: softmax per row / num_edges
    const Tensor beta = beta_of_alpha(ArchParams{alpha});
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double expect = beta.data[i] / static_cast<double>(E);
      max_closed = std::max(max_closed, std::abs(grad.data[i] - expect));
    }
    if (trial < 20) {
      // central differences against the (possibly mutated) gradient
      const double h = 1e-5;
      auto value_at = [](const Tensor& a) {
        Graph vg;
        const int lf = vg.leaf(a, LeafKind::Alpha);
        return vg.value(beta_decay_loss(vg, lf)).data[0];
      };
      for (std::size_t i = 0; i < alpha.size(); ++i) {
        Tensor p = alpha;
        p.data[i] += h;
        const double fp = value_at(p);
        p.data[i] -= 2.0 * h;
        const double fm = value_at(p);
        const double g_fd = (fp - fm) / (2.0 * h);
        max_fd = std::max(max_fd, std::abs(grad.data[i] - g_fd) /
                                      std::max(1.0, std::abs(g_fd)));
      }
    }
  }
  return {
      check("beta-grad/closed-form-1e-10", max_closed < 1e-10,
            "max abs dev " + fmt(max_closed)),
      check("beta-grad/finite-diff-1e-6", max_fd < 1e-6, "max rel err " + fmt(max_fd)),
  };
}

std::vector<SuiteResult> verify_theta() {
  Rng rng(7);
  const AlphaRegVariant variants[] = {AlphaRegVariant::BetaDecay,
                                      AlphaRegVariant::L2AdamEmulated,
                                      AlphaRegVariant::WeightDecay};
  double max_dev = 0.0;
  int order_violations = 0, boundary_violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t K = 3 + rng.below(6);
    std::vector<double> alpha(K), step(K);
    for (auto& v : alpha) v = rng.uniform(-2.0, 2.0);
    for (auto& v : step) v = rng.uniform(-0.5, 0.5);
    const double le = rng.uniform(0.0, 2.0);
    for (const auto variant : variants) {
      const auto r = theta_report(alpha, variant, le, step);
      max_dev = std::max(max_dev, r.max_deviation);
    }
    // ordering conclusions for Beta-Decay with a strictly positive coefficient
    const double le_pos = rng.uniform(0.05, 2.0);
    const auto theta = theta_simulated(alpha, AlphaRegVariant::BetaDecay, le_pos, step);
    std::size_t hi = 0, lo = 0;
    for (std::size_t k = 1; k < K; ++k) {
      if (alpha[k] > alpha[hi]) hi = k;
      if (alpha[k] < alpha[lo]) lo = k;
    }
    if (!(theta[hi] < 1.0 && theta[lo] > 1.0)) ++boundary_violations;
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j)
        if (alpha[i] > alpha[j] && !(theta[i] < theta[j])) ++order_violations;
  }
  return {
      check("theta/closed-vs-simulated-1e-8", max_dev < 1e-8,
            "max rel dev " + fmt(max_dev)),
      check("theta/extremes", boundary_violations == 0,
            std::to_string(boundary_violations) + " violations"),
      check("theta/monotone-in-alpha", order_violations == 0,
            std::to_string(order_violations) + " violations"),
  };
}

std::vector<SuiteResult> verify_flooding() {
  std::vector<SuiteResult> out;
  {
    ScalarLoss quad{[](double w) { return 0.5 * w * w; },
                    [](double w) { return w; }, [](double) { return 1.0; }};
    const auto r = flooding_taylor_check(quad, 1.0, 0.1, 0.5);
    out.push_back(check("flooding/quadratic-exact", r.error <= 1e-12,
                        "error " + fmt(r.error)));
  }
  {
    ScalarLoss quartic{[](double w) { return 0.25 * w * w * w * w; },
                       [](double w) { return w * w * w; },
                       [](double w) { return 3.0 * w * w; }};
    const double e1 = flooding_taylor_check(quartic, 1.0, 0.1, 0.25).error;
    const double e2 = flooding_taylor_check(quartic, 1.0, 0.05, 0.25).error;
    const double e3 = flooding_taylor_check(quartic, 1.0, 0.025, 0.25).error;
    const double ratio = e1 / e2;
    out.push_back(check("flooding/quartic-third-order",
                        ratio >= 6.0 && ratio <= 10.0, "ratio " + fmt(ratio)));
    out.push_back(check("flooding/error-monotone", e1 > e2 && e2 > e3,
                        fmt(e1) + " > " + fmt(e2) + " > " + fmt(e3)));
  }
  return out;
}

std::vector<SuiteResult> verify_criteria() {
  const int M = 6;
  const int m_seq[] = {0, 0, 1, 2, 3, 4, 6};
  int c1 = -1, c2 = -1, c3 = -1;
  for (int e = 0; e < 7; ++e) {
    const auto fired = criteria_fired(m_seq[e], M);
    if (c1 < 0 && fired.count(1)) c1 = e;
    if (c2 < 0 && fired.count(2)) c2 = e;
    if (c3 < 0 && fired.count(3)) c3 = e;
  }
  std::vector<SuiteResult> out;
  out.push_back(check("criteria/scripted-sequence", c1 == 2 && c2 == 4 && c3 == 6,
                      "fired at " + std::to_string(c1) + "/" + std::to_string(c2) +
                          "/" + std::to_string(c3)));
  // flags stay determined once set
  auto st = EarlyStopState::init(2, 2, 1e-3);
  bool monotone = true;
  const double pattern[][2] = {{0.1, 0.1}, {0.1, 0.2}, {0.1, 0.3},
                               {0.1, 0.4}, {0.1, 0.5}, {0.5, 0.6}};
  bool was_determined = false;
  for (const auto& p : pattern) {
    update_early_stop(st, {p[0], p[1]});
    if (was_determined && !st.determined[0]) monotone = false;
    was_determined = was_determined || st.determined[0];
  }
  out.push_back(check("criteria/flags-monotone", monotone && st.determined[0] &&
                                                     !st.determined[1]));
  return out;
}

std::vector<SuiteResult> verify_lipschitz() {
  std::vector<SuiteResult> out;
  {
    ArchParams uniform = ArchParams::zeros(1, 5);
    const auto m = lipschitz_measure(uniform);
    out.push_back(check("lipschitz/uniform-row",
                        std::abs(m.per_edge[0] - 1.0 / std::sqrt(5.0)) < 1e-12));
    ArchParams onehot = ArchParams::zeros(1, 5);
    onehot.alpha.at(0, 2) = 1e4;
    out.push_back(check("lipschitz/one-hot-row",
                        std::abs(lipschitz_measure(onehot).per_edge[0] - 1.0) < 1e-9));
  }
  Rng rng(11);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t K = 3 + rng.below(6);
    ArchParams a = ArchParams::zeros(1, K);
    for (auto& v : a.alpha.data) v = rng.uniform(-3.0, 3.0);
    const double le = rng.uniform(0.0, 1.0);
    ArchParams stepped{alpha_penalty_step(a.alpha, AlphaRegVariant::BetaDecay, le,
                                          1.0, Tensor{})};
    // ordering preserved and pairwise gaps weakly contracted
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j) {
        if (a.alpha.data[i] < a.alpha.data[j]) continue;
        const double gap0 = a.alpha.data[i] - a.alpha.data[j];
        const double gap1 = stepped.alpha.data[i] - stepped.alpha.data[j];
        if (!(gap1 >= -1e-15 && gap1 <= gap0 + 1e-15)) ++violations;
      }
    if (lipschitz_measure(stepped).per_edge[0] >
        lipschitz_measure(a).per_edge[0] + 1e-12)
      ++violations;
  }
  out.push_back(check("lipschitz/beta-decay-contraction", violations == 0,
                      std::to_string(violations) + " violations"));
  return out;
}

std::vector<SuiteResult> verify_all() {
  std::vector<SuiteResult> all;
  for (auto* fn : {+[] { return verify_beta_grad(false); }, +[] { return verify_theta(); },
                   +[] { return verify_flooding(); }, +[] { return verify_criteria(); },
                   +[] { return verify_lipschitz(); }}) {
    const auto part = fn();
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

}  // namespace bdpp
