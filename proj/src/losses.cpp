#include "hdpo/losses.hpp"

#include <cmath>

#include "hdpo/error.hpp"

namespace hdpo {

void LossWeights::validate() const {
  for (double v : {beta, beta_re, beta_ir, lambda_c, mu_o, rho_t}) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("loss weights must be finite and >= 0");
  }
}

double LossBreakdown::recombine(const LossWeights& w) const {
  return l_video + l_response + w.lambda_c * l_clip + w.mu_o * l_object + w.rho_t * l_token;
}

nlohmann::ordered_json breakdown_to_json(const LossBreakdown& b, std::size_t step) {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["l_response"] = b.l_response;
  j["l_video"] = b.l_video;
  j["l_clip"] = b.l_clip;
  j["l_object"] = b.l_object;
  j["l_token"] = b.l_token;
  j["l_total"] = b.l_total;
  return j;
}

double dpo_term(double u) {
  // softplus(-u) = max(-u, 0) + log1p(exp(-|u|))
  return std::max(-u, 0.0) + std::log1p(std::exp(-std::abs(u)));
}

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

namespace {

PolicyGrad empty_grad(const PolicyParams& p) {
  return ParamBlocks::zeros(p.vocab().size, p.d(), p.d_v());
}

void check_pair(const PolicyParams& theta, const PolicyParams& ref, GradMode mode) {
  if (!theta.same_shape(ref)) throw ConfigError("policy and reference shapes differ");
  if (mode == GradMode::with_grad && theta.frozen()) {
    throw ContractViolation("loss gradient requested for a frozen policy");
  }
}

double logratio(const PolicyParams& theta, const PolicyParams& ref, std::span<const double> v,
                const TokenSeq& x, const TokenSeq& y) {
  return sequence_log_prob(theta, v, x, y) - sequence_log_prob(ref, v, x, y);
}

// Sum of weighted log-ratio terms; the shared shape of every sigmoid loss.
struct RatioTerm {
  double coeff;
  std::span<const double> visual;
  const TokenSeq* response;
};

TermResult sigmoid_loss(const PolicyParams& theta, const PolicyParams& ref, const TokenSeq& x,
                        std::initializer_list<RatioTerm> terms, GradMode mode) {
  check_pair(theta, ref, mode);
  TermResult r;
  for (const auto& t : terms) r.margin += t.coeff * logratio(theta, ref, t.visual, x, *t.response);
  r.value = dpo_term(r.margin);
  if (mode == GradMode::with_grad) {
    r.grad = empty_grad(theta);
    const double dloss_du = -sigmoid(-r.margin);
    for (const auto& t : terms) {
      if (t.coeff == 0.0) continue;
      accumulate_sequence_grad(theta, t.visual, x, *t.response, dloss_du * t.coeff, r.grad);
    }
  }
  return r;
}

}  // namespace

TermResult response_loss(const PolicyParams& theta, const PolicyParams& ref,
                         const PreferenceRecord& rec, const LossWeights& w, GradMode mode) {
  if (rec.rejected_relevant.tokens.empty() || rec.rejected_irrelevant.tokens.empty()) {
    throw InvalidInput("response loss needs both relevant and irrelevant rejected responses");
  }
  const auto v = std::span<const double>(rec.video.chosen.features);
  return sigmoid_loss(theta, ref, rec.prompt,
                      {{w.beta, v, &rec.chosen},
                       {-w.beta * w.beta_re, v, &rec.rejected_relevant},
                       {-w.beta * w.beta_ir, v, &rec.rejected_irrelevant}},
                      mode);
}

TermResult video_loss(const PolicyParams& theta, const PolicyParams& ref,
                      std::span<const double> v_w, std::span<const double> v_l, const TokenSeq& x,
                      const TokenSeq& y_w, const TokenSeq& y_l, const LossWeights& w,
                      GradMode mode) {
  return sigmoid_loss(theta, ref, x, {{w.beta, v_w, &y_w}, {-w.beta, v_l, &y_l}}, mode);
}

TermResult clip_loss(const PolicyParams& theta, const PolicyParams& ref,
                     std::span<const double> v_w_c, std::span<const double> v_l_c,
                     const TokenSeq& x, const TokenSeq& y_w, const LossWeights& w, GradMode mode) {
  return sigmoid_loss(theta, ref, x, {{w.beta, v_w_c, &y_w}, {-w.beta, v_l_c, &y_w}}, mode);
}

TermResult object_loss(const PolicyParams& theta, const PolicyParams& ref,
                       std::span<const double> v_w_f, std::span<const double> v_l_f,
                       const TokenSeq& x, const TokenSeq& y_w, const LossWeights& w,
                       GradMode mode) {
  return sigmoid_loss(theta, ref, x, {{w.beta, v_w_f, &y_w}, {-w.beta, v_l_f, &y_w}}, mode);
}

double seq_kl(const PolicyParams& ref, const PolicyParams& theta, std::span<const double> v,
              const TokenSeq& x, const TokenSeq& y) {
  if (!theta.same_shape(ref)) throw ConfigError("policy and reference shapes differ");
  const SequenceEval r = forward_sequence(ref, v, x, y);
  const SequenceEval t = forward_sequence(theta, v, x, y);
  double total = 0.0;
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& lr = r.steps[i].log_probs;
    const auto& lt = t.steps[i].log_probs;
    for (std::size_t k = 0; k < lr.size(); ++k) total += std::exp(lr[k]) * (lr[k] - lt[k]);
  }
  return total;
}

void accumulate_seq_kl_grad(const PolicyParams& ref, const PolicyParams& theta,
                            std::span<const double> v, const TokenSeq& x, const TokenSeq& y,
                            double scale, PolicyGrad& grad) {
  const SequenceEval r = forward_sequence(ref, v, x, y);
  const SequenceEval t = forward_sequence(theta, v, x, y);
  std::vector<double> dlogits(theta.vocab().size);
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    // d/dlogits_theta of sum_k p_ref (log p_ref - log p_theta) = p_theta - p_ref
    const auto& lr = r.steps[i].log_probs;
    const auto& lt = t.steps[i].log_probs;
    for (std::size_t k = 0; k < dlogits.size(); ++k) dlogits[k] = std::exp(lt[k]) - std::exp(lr[k]);
    backward_step(theta, v, x, t.steps[i], dlogits, scale, grad);
  }
}

TermResult token_loss(const PolicyParams& theta, const PolicyParams& ref,
                      std::span<const double> v_w_f, const TokenSeq& x, const TokenSeq& y_w,
                      const TokenSeq& y_l, const LossWeights& w, GradMode mode) {
  check_pair(theta, ref, mode);
  TermResult r;
  r.value = w.beta * seq_kl(ref, theta, v_w_f, x, y_w) - w.beta * seq_kl(ref, theta, v_w_f, x, y_l);
  if (mode == GradMode::with_grad) {
    r.grad = empty_grad(theta);
    accumulate_seq_kl_grad(ref, theta, v_w_f, x, y_l, -w.beta, r.grad);
  }
  return r;
}

double tlpo_combined(const PolicyParams& theta, const PolicyParams& ref,
                     std::span<const double> v_w_f, const TokenSeq& x, const TokenSeq& y_w,
                     const TokenSeq& y_l, const LossWeights& w, double alpha) {
  if (alpha < 0.0) throw InvalidInput("alpha must be >= 0");
  const double reward_gap =
      w.beta * logratio(theta, ref, v_w_f, x, y_w) - w.beta * logratio(theta, ref, v_w_f, x, y_l);
  const double kl_gap = seq_kl(ref, theta, v_w_f, x, y_w) - seq_kl(ref, theta, v_w_f, x, y_l);
  return dpo_term(reward_gap - alpha * kl_gap);
}

LossBreakdown total_loss(const PolicyParams& theta, const PolicyParams& ref,
                         const PreferenceRecord& rec, const LossWeights& w, GradMode mode,
                         RejectedChoice rejected) {
  w.validate();
  const TokenSeq& y_l =
      rejected == RejectedChoice::relevant ? rec.rejected_relevant : rec.rejected_irrelevant;
  const auto fv = [](const Visual& v) { return std::span<const double>(v.features); };

  TermResult r = response_loss(theta, ref, rec, w, mode);
  TermResult v = video_loss(theta, ref, fv(rec.video.chosen), fv(rec.video.rejected), rec.prompt,
                            rec.chosen, y_l, w, mode);
  TermResult c = clip_loss(theta, ref, fv(rec.clip.chosen), fv(rec.clip.rejected), rec.prompt,
                           rec.chosen, w, mode);
  TermResult o = object_loss(theta, ref, fv(rec.object.chosen), fv(rec.object.rejected),
                             rec.prompt, rec.chosen, w, mode);
  TermResult t = token_loss(theta, ref, fv(rec.object.chosen), rec.prompt, rec.chosen, y_l, w, mode);

  LossBreakdown b;
  b.l_response = r.value;
  b.l_video = v.value;
  b.l_clip = c.value;
  b.l_object = o.value;
  b.l_token = t.value;
  b.l_total = b.recombine(w);
  if (mode == GradMode::with_grad) {
    b.grad = std::move(v.grad);
    b.grad += r.grad;
    c.grad *= w.lambda_c;
    b.grad += c.grad;
    o.grad *= w.mu_o;
    b.grad += o.grad;
    t.grad *= w.rho_t;
    b.grad += t.grad;
  }
  return b;
}

LossBreakdown batch_loss(const PolicyParams& theta, const PolicyParams& ref,
                         std::span<const PreferenceRecord> batch, const LossWeights& w,
                         GradMode mode, RejectedChoice rejected) {
  std::vector<const PreferenceRecord*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& r : batch) ptrs.push_back(&r);
  return batch_loss(theta, ref, std::span<const PreferenceRecord* const>(ptrs), w, mode, rejected);
}

LossBreakdown batch_loss(const PolicyParams& theta, const PolicyParams& ref,
                         std::span<const PreferenceRecord* const> batch, const LossWeights& w,
                         GradMode mode, RejectedChoice rejected) {
  if (batch.empty()) throw InvalidInput("empty batch");
  LossBreakdown sum;
  if (mode == GradMode::with_grad) sum.grad = empty_grad(theta);
  for (const PreferenceRecord* rec : batch) {
    LossBreakdown b = total_loss(theta, ref, *rec, w, mode, rejected);
    sum.l_response += b.l_response;
    sum.l_video += b.l_video;
    sum.l_clip += b.l_clip;
    sum.l_object += b.l_object;
    sum.l_token += b.l_token;
    if (mode == GradMode::with_grad) sum.grad += b.grad;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  sum.l_response *= inv;
  sum.l_video *= inv;
  sum.l_clip *= inv;
  sum.l_object *= inv;
  sum.l_token *= inv;
  sum.l_total = sum.recombine(w);
  if (mode == GradMode::with_grad) sum.grad *= inv;
  return sum;
}

}  // namespace hdpo
