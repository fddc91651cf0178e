#include "hdpo/gradcheck.hpp"

#include <algorithm>
#include <random>

namespace hdpo {

namespace {

TokenSeq random_tokens(std::mt19937_64& rng, std::size_t vocab, std::size_t min_len,
                       std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<TokenId> tok(2, static_cast<TokenId>(vocab - 1));
  TokenSeq s;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) s.tokens.push_back(tok(rng));
  return s;
}

TokenSeq random_response(std::mt19937_64& rng, std::size_t vocab) {
  TokenSeq s = random_tokens(rng, vocab, 1, 4);
  s.tokens.push_back(1);  // eos
  s.role = SeqRole::response;
  return s;
}

Visual random_visual(std::mt19937_64& rng, std::size_t d_v) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Visual v;
  v.features.resize(d_v);
  for (double& x : v.features) x = u(rng);
  return v;
}

}  // namespace

GradInstance random_grad_instance(std::uint64_t seed, const InstanceShape& shape) {
  std::mt19937_64 rng(seed);
  const Vocab vocab{shape.vocab, 0, 1};
  GradInstance inst{
      PolicyParams::gaussian(vocab, rng(), shape.d, shape.d_v, shape.stddev),
      freeze_reference(PolicyParams::gaussian(vocab, rng(), shape.d, shape.d_v, shape.stddev)),
      {},
      {}};
  PreferenceRecord& r = inst.record;
  r.source_id = "grad-" + std::to_string(seed);
  r.prompt = random_tokens(rng, shape.vocab, 2, 5);
  r.prompt.role = SeqRole::prompt;
  r.chosen = random_response(rng, shape.vocab);
  do {
    r.rejected_relevant = random_response(rng, shape.vocab);
  } while (r.rejected_relevant == r.chosen);
  do {
    r.rejected_irrelevant = random_response(rng, shape.vocab);
  } while (r.rejected_irrelevant == r.chosen);
  for (VisualPair* p : {&r.video, &r.clip, &r.object}) {
    p->chosen = random_visual(rng, shape.d_v);
    p->rejected = random_visual(rng, shape.d_v);
  }
  return inst;
}

std::string_view term_name(LossTerm term) noexcept {
  switch (term) {
    case LossTerm::response: return "response";
    case LossTerm::video: return "video";
    case LossTerm::clip: return "clip";
    case LossTerm::object: return "object";
    case LossTerm::token: return "token";
    case LossTerm::total: return "total";
  }
  return "?";
}

namespace {

std::span<const double> fv(const Visual& v) { return v.features; }

TermResult eval_term(const GradInstance& inst, LossTerm term, const PolicyParams& at,
                     GradMode mode) {
  const PreferenceRecord& r = inst.record;
  const PolicyParams& ref = inst.reference;
  const LossWeights& w = inst.weights;
  switch (term) {
    case LossTerm::response: return response_loss(at, ref, r, w, mode);
    case LossTerm::video:
      return video_loss(at, ref, fv(r.video.chosen), fv(r.video.rejected), r.prompt, r.chosen,
                        r.rejected_relevant, w, mode);
    case LossTerm::clip:
      return clip_loss(at, ref, fv(r.clip.chosen), fv(r.clip.rejected), r.prompt, r.chosen, w, mode);
    case LossTerm::object:
      return object_loss(at, ref, fv(r.object.chosen), fv(r.object.rejected), r.prompt, r.chosen,
                         w, mode);
    case LossTerm::token:
      return token_loss(at, ref, fv(r.object.chosen), r.prompt, r.chosen, r.rejected_relevant, w,
                        mode);
    case LossTerm::total: {
      LossBreakdown b = total_loss(at, ref, r, w, mode);
      return {b.l_total, 0.0, std::move(b.grad)};
    }
  }
  return {};
}

// beta * KL(y_w) on the keyframe: the stop-gradient part of the token term.
double frozen_token_part(const GradInstance& inst, const PolicyParams& at) {
  const PreferenceRecord& r = inst.record;
  return inst.weights.beta * seq_kl(inst.reference, at, fv(r.object.chosen), r.prompt, r.chosen);
}

}  // namespace

PolicyGrad analytic_term_grad(const GradInstance& inst, LossTerm term) {
  return eval_term(inst, term, inst.theta, GradMode::with_grad).grad;
}

double surrogate_term_value(const GradInstance& inst, LossTerm term, const PolicyParams& at) {
  double value = eval_term(inst, term, at, GradMode::value_only).value;
  if (term == LossTerm::token || term == LossTerm::total) {
    const double scale = term == LossTerm::total ? inst.weights.rho_t : 1.0;
    value += scale * (frozen_token_part(inst, inst.theta) - frozen_token_part(inst, at));
  }
  return value;
}

oracle::GradComparison check_term(const GradInstance& inst, LossTerm term,
                                  const oracle::FDConfig& fd) {
  const PolicyGrad analytic = analytic_term_grad(inst, term);
  const PolicyGrad numeric = oracle::finite_diff_grad(
      [&](const PolicyParams& p) { return surrogate_term_value(inst, term, p); }, inst.theta, fd);
  return oracle::compare_gradients(analytic, numeric);
}

}  // namespace hdpo
