#include "hdpo/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "hdpo/error.hpp"

namespace hdpo::oracle {

PolicyGrad finite_diff_grad(const std::function<double(const PolicyParams&)>& loss_fn,
                            const PolicyParams& params, const FDConfig& cfg) {
  if (!(cfg.epsilon > 0.0)) throw ConfigError("finite-difference epsilon must be positive");
  PolicyParams probe = params;
  if (probe.frozen()) throw ContractViolation("finite differences need trainable params");
  PolicyGrad grad = ParamBlocks::zeros(params.vocab().size, params.d(), params.d_v());
  const std::size_t n = grad.size();
  for (std::size_t i = 0; i < n; ++i) {
    double& slot = probe.mutable_blocks().at(i);
    const double orig = slot;
    slot = orig + cfg.epsilon;
    const double up = loss_fn(probe);
    slot = orig - cfg.epsilon;
    const double down = loss_fn(probe);
    slot = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("non-finite loss during finite differences", i);
    }
    grad.at(i) = (up - down) / (2.0 * cfg.epsilon);
  }
  return grad;
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> point, const FDConfig& cfg) {
  if (!(cfg.epsilon > 0.0)) throw ConfigError("finite-difference epsilon must be positive");
  std::vector<double> p(point.begin(), point.end());
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + cfg.epsilon;
    const double up = f(p);
    p[i] = orig - cfg.epsilon;
    const double down = f(p);
    p[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("non-finite loss during finite differences", i);
    }
    g[i] = (up - down) / (2.0 * cfg.epsilon);
  }
  return g;
}

double GradComparison::worst() const {
  return *std::max_element(max_rel_err.begin(), max_rel_err.end());
}

GradComparison compare_gradients(const PolicyGrad& analytic, const PolicyGrad& numeric,
                                 double floor) {
  GradComparison cmp;
  for (std::size_t b = 0; b < ParamBlocks::kNumBlocks; ++b) {
    const auto& a = analytic.block(b).data;
    const auto& n = numeric.block(b).data;
    if (a.size() != n.size()) throw ConfigError("gradient shapes differ");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double abs_err = std::abs(a[i] - n[i]);
      const double scale = std::max({std::abs(a[i]), std::abs(n[i]), floor});
      cmp.max_abs_err[b] = std::max(cmp.max_abs_err[b], abs_err);
      cmp.max_rel_err[b] = std::max(cmp.max_rel_err[b], abs_err / scale);
    }
  }
  return cmp;
}

double bt_probability(double reward_w, double reward_l) {
  const double m = std::max(reward_w, reward_l);
  const double ew = std::exp(reward_w - m);
  const double el = std::exp(reward_l - m);
  return ew / (ew + el);
}

std::vector<std::vector<double>> brute_step_distributions(const PolicyParams& params,
                                                          std::span<const double> visual,
                                                          const TokenSeq& x, const TokenSeq& y) {
  const auto& P = params.blocks();
  const std::size_t d = params.d(), V = params.vocab().size, k = params.window();
  std::vector<std::vector<double>> dists;
  std::vector<TokenId> history{params.vocab().bos_id};
  for (std::size_t step = 0; step < y.tokens.size(); ++step) {
    std::vector<double> phi(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < visual.size(); ++j) acc += visual[j] * P.visual_proj(j, c);
      double pm = 0.0;
      for (TokenId t : x.tokens) pm += P.embed(t, c);
      if (!x.tokens.empty()) acc += pm / static_cast<double>(x.tokens.size());
      double win = 0.0;
      const std::size_t first = history.size() > k ? history.size() - k : 0;
      for (std::size_t h = first; h < history.size(); ++h) win += P.embed(history[h], c);
      acc += win / static_cast<double>(k);
      phi[c] = acc;
    }
    std::vector<double> logits(V, 0.0);
    for (std::size_t t = 0; t < V; ++t) {
      for (std::size_t c = 0; c < d; ++c) logits[t] += P.out(t, c) * phi[c];
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    std::vector<double> p(V);
    for (std::size_t t = 0; t < V; ++t) p[t] = std::exp(logits[t] - mx) / z;
    dists.push_back(std::move(p));
    history.push_back(y.tokens[step]);
  }
  return dists;
}

double brute_sequence_log_prob(const PolicyParams& params, std::span<const double> visual,
                               const TokenSeq& x, const TokenSeq& y) {
  const auto dists = brute_step_distributions(params, visual, x, y);
  double total = 0.0;
  for (std::size_t i = 0; i < dists.size(); ++i) total += std::log(dists[i][y.tokens[i]]);
  return total;
}

double brute_seq_kl(const PolicyParams& ref, const PolicyParams& theta,
                    std::span<const double> visual, const TokenSeq& x, const TokenSeq& y) {
  const auto pr = brute_step_distributions(ref, visual, x, y);
  const auto pt = brute_step_distributions(theta, visual, x, y);
  double total = 0.0;
  for (std::size_t i = 0; i < pr.size(); ++i) {
    double step_kl = 0.0;
    for (std::size_t k = 0; k < pr[i].size(); ++k) {
      if (pr[i][k] > 0.0) step_kl += pr[i][k] * std::log(pr[i][k] / pt[i][k]);
    }
    total += step_kl;
  }
  return total;
}

NormalizationReport check_normalization(const LogProbFn& log_probs,
                                        std::span<const StepContext> contexts, double tolerance) {
  NormalizationReport report;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto lp = log_probs(contexts[i]);
    double sum = 0.0;
    bool finite = true;
    for (double v : lp) {
      finite = finite && std::isfinite(v);
      sum += std::exp(v);
    }
    const double dev = finite ? std::abs(sum - 1.0) : INFINITY;
    report.max_deviation = std::max(report.max_deviation, dev);
    ++report.checked;
    if (!(dev <= tolerance) && !report.first_failure) {
      report.ok = false;
      report.first_failure = i;
    }
  }
  return report;
}

NormalizationReport check_normalization(const PolicyParams& params,
                                        std::span<const StepContext> contexts, double tolerance) {
  return check_normalization([&](const StepContext& c) { return step_log_probs(params, c); },
                             contexts, tolerance);
}

double reassemble_u(const PairLogProbs& lp, double beta) {
  return beta * (lp.theta_w - lp.ref_w) - beta * (lp.theta_l - lp.ref_l);
}

double reassemble_u(const DualLogProbs& lp, double beta, double beta_re, double beta_ir) {
  return beta * (lp.theta_w - lp.ref_w) -
         beta * (beta_re * (lp.theta_re - lp.ref_re) + beta_ir * (lp.theta_ir - lp.ref_ir));
}

}  // namespace hdpo::oracle
