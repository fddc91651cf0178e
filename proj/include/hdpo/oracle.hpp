#pragma once

// Brute-force reference computations for tests and the check-grad command.
// Nothing here calls into the loss module; policy quantities are recomputed
// from the raw parameter matrices with plain loops.

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hdpo/policy.hpp"

namespace hdpo::oracle {

struct FDConfig {
  double epsilon = 1e-5;  // central differences only
};

// Central differences over every parameter entry. Throws NumericalError
// (step = flat index) when the loss is non-finite at a probe point.
PolicyGrad finite_diff_grad(const std::function<double(const PolicyParams&)>& loss_fn,
                            const PolicyParams& params, const FDConfig& cfg = {});

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> point, const FDConfig& cfg = {});

// |a - n| / max(|a|, |n|, floor), maximised per block.
struct GradComparison {
  std::array<double, ParamBlocks::kNumBlocks> max_rel_err{};
  std::array<double, ParamBlocks::kNumBlocks> max_abs_err{};
  double worst() const;
};

inline constexpr double kRelErrFloor = 1e-3;

GradComparison compare_gradients(const PolicyGrad& analytic, const PolicyGrad& numeric,
                                 double floor = kRelErrFloor);

// exp(r_w) / (exp(r_w) + exp(r_l)), max-shifted.
double bt_probability(double reward_w, double reward_l);

// Independent recomputation of log pi(y | v, x) by explicit per-step softmax.
double brute_sequence_log_prob(const PolicyParams& params, std::span<const double> visual,
                               const TokenSeq& x, const TokenSeq& y);

// Per-step full-vocabulary distributions of a response, by explicit loops.
std::vector<std::vector<double>> brute_step_distributions(const PolicyParams& params,
                                                          std::span<const double> visual,
                                                          const TokenSeq& x, const TokenSeq& y);

// sum_t sum_k p_ref log(p_ref / p_theta), by direct summation.
double brute_seq_kl(const PolicyParams& ref, const PolicyParams& theta,
                    std::span<const double> visual, const TokenSeq& x, const TokenSeq& y);

struct NormalizationReport {
  bool ok = true;
  std::size_t checked = 0;
  double max_deviation = 0.0;
  std::optional<std::size_t> first_failure;  // index into the context list
};

using LogProbFn = std::function<std::vector<double>(const StepContext&)>;

NormalizationReport check_normalization(const LogProbFn& log_probs,
                                        std::span<const StepContext> contexts,
                                        double tolerance = 1e-12);
NormalizationReport check_normalization(const PolicyParams& params,
                                        std::span<const StepContext> contexts,
                                        double tolerance = 1e-12);

// Sequence log-probs under both policies for a two-sided margin.
struct PairLogProbs {
  double theta_w = 0.0, ref_w = 0.0;
  double theta_l = 0.0, ref_l = 0.0;
};

// Chosen plus both rejected responses.
struct DualLogProbs {
  double theta_w = 0.0, ref_w = 0.0;
  double theta_re = 0.0, ref_re = 0.0;
  double theta_ir = 0.0, ref_ir = 0.0;
};

// beta*(theta_w - ref_w) - beta*(theta_l - ref_l)
double reassemble_u(const PairLogProbs& lp, double beta);
// beta*(theta_w - ref_w) - beta*[beta_re*(theta_re - ref_re) + beta_ir*(theta_ir - ref_ir)]
double reassemble_u(const DualLogProbs& lp, double beta, double beta_re, double beta_ir);

}  // namespace hdpo::oracle
