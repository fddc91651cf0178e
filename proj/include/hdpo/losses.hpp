#pragma once

// Hierarchical preference losses over a trainable policy and its frozen
// reference. Every sigmoid-based term is -log sigma(u) for a margin u built
// from log-ratios logratio(y | v) = log pi_theta(y | v, x) - log pi_ref(y | v, x).

#include <span>
#include <vector>

#include <json.hpp>

#include "hdpo/policy.hpp"
#include "hdpo/record.hpp"

namespace hdpo {

struct LossWeights {
  double beta = 0.1;
  double beta_re = 0.7;
  double beta_ir = 0.3;
  double lambda_c = 0.4;  // clip
  double mu_o = 0.2;      // object
  double rho_t = 0.1;     // token

  // Throws ConfigError on negative or non-finite weights.
  void validate() const;
};

// Which rejected response pairs with the video-level and token-level terms.
enum class RejectedChoice { relevant, irrelevant };

enum class GradMode { value_only, with_grad };

// One loss term. `margin` is the u inside the sigmoid (0 for the token term).
struct TermResult {
  double value = 0.0;
  double margin = 0.0;
  PolicyGrad grad;  // empty blocks unless requested
};

struct LossBreakdown {
  double l_response = 0.0;
  double l_video = 0.0;
  double l_clip = 0.0;
  double l_object = 0.0;
  double l_token = 0.0;
  double l_total = 0.0;
  PolicyGrad grad;  // d l_total / d theta, empty unless requested

  // l_video + l_response + lambda*l_clip + mu*l_object + rho*l_token
  double recombine(const LossWeights& w) const;
};

nlohmann::ordered_json breakdown_to_json(const LossBreakdown& b, std::size_t step);

// -log sigma(u), evaluated as softplus(-u).
double dpo_term(double u);
double sigmoid(double u);

TermResult response_loss(const PolicyParams& theta, const PolicyParams& ref,
                         const PreferenceRecord& rec, const LossWeights& w,
                         GradMode mode = GradMode::value_only);

TermResult video_loss(const PolicyParams& theta, const PolicyParams& ref,
                      std::span<const double> v_w, std::span<const double> v_l, const TokenSeq& x,
                      const TokenSeq& y_w, const TokenSeq& y_l, const LossWeights& w,
                      GradMode mode = GradMode::value_only);

// Visual contrast only: y_w on both sides.
TermResult clip_loss(const PolicyParams& theta, const PolicyParams& ref,
                     std::span<const double> v_w_c, std::span<const double> v_l_c,
                     const TokenSeq& x, const TokenSeq& y_w, const LossWeights& w,
                     GradMode mode = GradMode::value_only);

TermResult object_loss(const PolicyParams& theta, const PolicyParams& ref,
                       std::span<const double> v_w_f, std::span<const double> v_l_f,
                       const TokenSeq& x, const TokenSeq& y_w, const LossWeights& w,
                       GradMode mode = GradMode::value_only);

// sum_t KL(pi_ref(. | v, x, y_<t) || pi_theta(. | v, x, y_<t)) over the full vocabulary.
double seq_kl(const PolicyParams& ref, const PolicyParams& theta, std::span<const double> v,
              const TokenSeq& x, const TokenSeq& y);

// grad += scale * d seq_kl / d theta
void accumulate_seq_kl_grad(const PolicyParams& ref, const PolicyParams& theta,
                            std::span<const double> v, const TokenSeq& x, const TokenSeq& y,
                            double scale, PolicyGrad& grad);

// beta*KL(y_w) - beta*KL(y_l); the y_w term is stop-gradient, so the gradient
// is -beta * d KL(y_l) / d theta.
TermResult token_loss(const PolicyParams& theta, const PolicyParams& ref,
                      std::span<const double> v_w_f, const TokenSeq& x, const TokenSeq& y_w,
                      const TokenSeq& y_l, const LossWeights& w,
                      GradMode mode = GradMode::value_only);

// -log sigma(u_single - alpha * (KL(y_w) - sg(KL(y_l)))), everything conditioned on v_w_f.
double tlpo_combined(const PolicyParams& theta, const PolicyParams& ref,
                     std::span<const double> v_w_f, const TokenSeq& x, const TokenSeq& y_w,
                     const TokenSeq& y_l, const LossWeights& w, double alpha);

LossBreakdown total_loss(const PolicyParams& theta, const PolicyParams& ref,
                         const PreferenceRecord& rec, const LossWeights& w,
                         GradMode mode = GradMode::value_only,
                         RejectedChoice rejected = RejectedChoice::relevant);

// Mean over records (values and gradient).
LossBreakdown batch_loss(const PolicyParams& theta, const PolicyParams& ref,
                         std::span<const PreferenceRecord> batch, const LossWeights& w,
                         GradMode mode = GradMode::value_only,
                         RejectedChoice rejected = RejectedChoice::relevant);

LossBreakdown batch_loss(const PolicyParams& theta, const PolicyParams& ref,
                         std::span<const PreferenceRecord* const> batch, const LossWeights& w,
                         GradMode mode = GradMode::value_only,
                         RejectedChoice rejected = RejectedChoice::relevant);

}  // namespace hdpo
