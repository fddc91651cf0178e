#include "hdpo/train.hpp"

#include <cmath>
#include <random>

#include "hdpo/error.hpp"
#include "hdpo/video.hpp"

namespace hdpo {

AdamState AdamState::for_params(const PolicyParams& params) {
  return {ParamBlocks::zeros(params.vocab().size, params.d(), params.d_v()),
          ParamBlocks::zeros(params.vocab().size, params.d(), params.d_v()), 0};
}

void adam_step(PolicyParams& params, const PolicyGrad& grad, AdamState& state,
               const AdamConfig& cfg) {
  ParamBlocks& p = params.mutable_blocks();
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t b = 0; b < ParamBlocks::kNumBlocks; ++b) {
    auto& w = p.block(b).data;
    auto& m = state.m.block(b).data;
    auto& v = state.v.block(b).data;
    const auto& g = grad.block(b).data;
    if (g.size() != w.size()) throw ConfigError("gradient does not match parameter shape");
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

void TrainConfig::validate() const {
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  weights.validate();
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(splitmix64(seed ^ static_cast<std::uint64_t>(epoch + 1)));
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

double mean_margin(const PolicyParams& params, std::span<const PreferenceRecord> corpus) {
  if (corpus.empty()) throw InvalidInput("empty corpus");
  double sum = 0.0;
  for (const auto& r : corpus) {
    const auto& v = r.video.chosen.features;
    sum += sequence_log_prob(params, v, r.prompt, r.chosen) -
           sequence_log_prob(params, v, r.prompt, r.rejected_relevant);
  }
  return sum / static_cast<double>(corpus.size());
}

TrainResult train_loop(std::span<const PreferenceRecord> corpus, const TrainConfig& cfg,
                       const PolicyParams& init, const StepCallback& on_step) {
  cfg.validate();
  if (corpus.empty()) throw InvalidInput("training corpus is empty");
  TrainResult result{init, freeze_reference(init), {}, {}};
  if (result.params.frozen()) throw ContractViolation("cannot train frozen parameters");
  AdamState state = AdamState::for_params(init);
  result.epoch_margins.push_back(mean_margin(result.params, corpus));

  std::vector<const PreferenceRecord*> batch;
  std::size_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = epoch_order(corpus.size(), cfg.seed, epoch);
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(lo + cfg.batch_size, order.size());
      batch.clear();
      for (std::size_t i = lo; i < hi; ++i) batch.push_back(&corpus[order[i]]);
      LossBreakdown b = batch_loss(result.params, result.reference,
                                   std::span<const PreferenceRecord* const>(batch), cfg.weights,
                                   GradMode::with_grad, cfg.rejected);
      if (!std::isfinite(b.l_total) || !b.grad.all_finite()) {
        throw NumericalError("non-finite loss", step);
      }
      adam_step(result.params, b.grad, state, cfg.adam);
      b.grad = {};
      if (on_step) on_step(step, b);
      result.log.push_back(std::move(b));
      ++step;
    }
    result.epoch_margins.push_back(mean_margin(result.params, corpus));
  }
  return result;
}

}  // namespace hdpo
