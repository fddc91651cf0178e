#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hdpo/losses.hpp"
#include "hdpo/policy.hpp"
#include "hdpo/record.hpp"

namespace hdpo {

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ParamBlocks m;
  ParamBlocks v;
  std::size_t t = 0;

  static AdamState for_params(const PolicyParams& params);
};

// Bias-corrected adaptive-moment update. Throws ContractViolation for frozen params.
void adam_step(PolicyParams& params, const PolicyGrad& grad, AdamState& state,
               const AdamConfig& cfg);

struct TrainConfig {
  static constexpr double kLargeModelLearningRate = 5e-7;

  AdamConfig adam;         // toy default lr 1e-2
  int epochs = 3;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  LossWeights weights;
  RejectedChoice rejected = RejectedChoice::relevant;

  void validate() const;
};

struct TrainResult {
  PolicyParams params;
  PolicyParams reference;
  std::vector<LossBreakdown> log;   // one entry per optimizer step, values only
  // Corpus-mean log pi(y_w) - log pi(y_l^re) on the source video; index 0 is
  // before training, index e after epoch e.
  std::vector<double> epoch_margins;
};

using StepCallback = std::function<void(std::size_t step, const LossBreakdown&)>;

// Batch order for one epoch: Fisher-Yates over 0..n-1 with
// mt19937_64(splitmix64(seed ^ (epoch + 1))), swapping i with rng() % (i + 1).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

// Minimizes the batch-mean total loss. The reference is a frozen copy of `init`.
// Throws NumericalError on a non-finite loss.
TrainResult train_loop(std::span<const PreferenceRecord> corpus, const TrainConfig& cfg,
                       const PolicyParams& init, const StepCallback& on_step = {});

double mean_margin(const PolicyParams& params, std::span<const PreferenceRecord> corpus);

}  // namespace hdpo
