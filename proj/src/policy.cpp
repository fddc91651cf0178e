#include "hdpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "hdpo/error.hpp"
#include "hdpo/kernels.hpp"

namespace hdpo {

void Vocab::validate() const {
  if (size == 0 || size > 256) throw ConfigError("vocab size must be in [1, 256]");
  if (bos_id == eos_id) throw ConfigError("bos and eos must differ");
  if (bos_id >= size || eos_id >= size) throw ConfigError("bos/eos outside vocab");
}

void validate_sequence(const TokenSeq& seq, const Vocab& vocab) {
  if (seq.tokens.empty()) throw InvalidInput("token sequence is empty");
  for (TokenId t : seq.tokens) {
    if (t >= vocab.size) throw InvalidInput("token id " + std::to_string(t) + " outside vocab");
  }
  if (seq.role == SeqRole::response && seq.tokens.back() != vocab.eos_id) {
    throw InvalidInput("response does not end with eos");
  }
}

// --- ParamBlocks ------------------------------------------------------------

ParamBlocks ParamBlocks::zeros(std::size_t vocab, std::size_t d, std::size_t d_v) {
  return {Matrix(vocab, d), Matrix(d_v, d), Matrix(vocab, d)};
}

Matrix& ParamBlocks::block(std::size_t i) {
  switch (i) {
    case 0: return embed;
    case 1: return visual_proj;
    default: return out;
  }
}

const Matrix& ParamBlocks::block(std::size_t i) const {
  return const_cast<ParamBlocks*>(this)->block(i);
}

double& ParamBlocks::at(std::size_t flat) {
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    Matrix& m = block(b);
    if (flat < m.size()) return m.data[flat];
    flat -= m.size();
  }
  throw std::out_of_range("flat parameter index");
}

double ParamBlocks::at(std::size_t flat) const { return const_cast<ParamBlocks*>(this)->at(flat); }

ParamBlocks& ParamBlocks::operator+=(const ParamBlocks& rhs) {
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    auto& lhs = block(b).data;
    const auto& r = rhs.block(b).data;
    if (lhs.size() != r.size()) throw ConfigError("gradient shape mismatch");
    kernels::axpy(1.0, r, lhs);
  }
  return *this;
}

ParamBlocks& ParamBlocks::operator*=(double s) {
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    for (double& v : block(b).data) v *= s;
  }
  return *this;
}

bool ParamBlocks::all_finite() const {
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    for (double v : block(b).data) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

// --- PolicyParams -----------------------------------------------------------

PolicyParams::PolicyParams(Vocab vocab, std::size_t d, std::size_t d_v, std::size_t window,
                           std::uint64_t seed)
    : vocab_(vocab), d_(d), d_v_(d_v), window_(window), seed_(seed) {
  vocab_.validate();
  if (d == 0 || d_v == 0) throw ConfigError("policy widths must be positive");
  if (window == 0) throw ConfigError("prefix window must be positive");
  blocks_ = ParamBlocks::zeros(vocab_.size, d_, d_v_);
}

PolicyParams PolicyParams::gaussian(Vocab vocab, std::uint64_t seed, std::size_t d,
                                    std::size_t d_v, double stddev, std::size_t window) {
  PolicyParams p(vocab, d, d_v, window, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  for (std::size_t b = 0; b < ParamBlocks::kNumBlocks; ++b) {
    for (double& v : p.blocks_.block(b).data) v = normal(rng);
  }
  return p;
}

ParamBlocks& PolicyParams::mutable_blocks() {
  if (frozen_) throw ContractViolation("attempt to mutate frozen policy parameters");
  return blocks_;
}

std::uint64_t PolicyParams::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t b = 0; b < ParamBlocks::kNumBlocks; ++b) {
    const auto& data = blocks_.block(b).data;
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
    for (std::size_t i = 0; i < data.size() * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

bool PolicyParams::same_shape(const PolicyParams& other) const {
  return vocab_ == other.vocab_ && d_ == other.d_ && d_v_ == other.d_v_ && window_ == other.window_;
}

PolicyParams freeze_reference(const PolicyParams& params) {
  PolicyParams copy = params;
  copy.frozen_ = true;
  return copy;
}

// --- forward ----------------------------------------------------------------

namespace {

void check_visual(const PolicyParams& params, std::span<const double> visual) {
  if (visual.size() != params.d_v()) {
    throw ConfigError("visual feature width " + std::to_string(visual.size()) +
                      " does not match policy d_v " + std::to_string(params.d_v()));
  }
}

std::vector<double> prompt_mean(const PolicyParams& params, const TokenSeq& x) {
  std::vector<double> mean(params.d(), 0.0);
  if (x.tokens.empty()) return mean;
  const double w = 1.0 / static_cast<double>(x.tokens.size());
  for (TokenId t : x.tokens) {
    if (t >= params.vocab().size) throw InvalidInput("prompt token outside vocab");
    kernels::axpy(w, params.blocks().embed.row(t), mean);
  }
  return mean;
}

// Last `window` tokens of [bos] ++ prefix, oldest first.
std::vector<TokenId> window_tokens(const PolicyParams& params, std::span<const TokenId> prefix) {
  std::vector<TokenId> full;
  full.reserve(prefix.size() + 1);
  full.push_back(params.vocab().bos_id);
  full.insert(full.end(), prefix.begin(), prefix.end());
  const std::size_t k = std::min(params.window(), full.size());
  return {full.end() - static_cast<std::ptrdiff_t>(k), full.end()};
}

// phi = visual_proj^T v + prompt_mean + (1/k) sum(window embeddings)
std::vector<double> compute_phi(const PolicyParams& params, std::span<const double> visual,
                                std::span<const double> pmean, std::span<const TokenId> window) {
  std::vector<double> phi(pmean.begin(), pmean.end());
  kernels::gemv_t_acc(params.blocks().visual_proj, visual, phi);
  const double w = 1.0 / static_cast<double>(params.window());
  for (TokenId t : window) kernels::axpy(w, params.blocks().embed.row(t), phi);
  return phi;
}

std::vector<double> logits_to_log_probs(const PolicyParams& params, std::span<const double> phi) {
  std::vector<double> lp(params.vocab().size);
  kernels::gemv(params.blocks().out, phi, lp);
  log_softmax_inplace(lp);
  return lp;
}

}  // namespace

void log_softmax_inplace(std::span<double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (double& v : logits) v -= lse;
}

StepContext make_step_context(const PolicyParams& params, std::span<const double> visual,
                              const TokenSeq& x, std::span<const TokenId> prefix) {
  check_visual(params, visual);
  StepContext ctx;
  ctx.visual.assign(visual.begin(), visual.end());
  ctx.prompt_mean = prompt_mean(params, x);
  const auto win = window_tokens(params, prefix);
  ctx.prefix_window.assign(params.window(), std::vector<double>(params.d(), 0.0));
  const std::size_t pad = params.window() - win.size();
  for (std::size_t i = 0; i < win.size(); ++i) {
    const auto row = params.blocks().embed.row(win[i]);
    ctx.prefix_window[pad + i].assign(row.begin(), row.end());
  }
  return ctx;
}

std::vector<double> step_features(const PolicyParams& params, const StepContext& ctx) {
  if (ctx.visual.size() != params.d_v() || ctx.prompt_mean.size() != params.d()) {
    throw ConfigError("step context dimensions do not match policy");
  }
  std::vector<double> phi = ctx.prompt_mean;
  kernels::gemv_t_acc(params.blocks().visual_proj, ctx.visual, phi);
  const double w = 1.0 / static_cast<double>(params.window());
  for (const auto& slot : ctx.prefix_window) {
    if (slot.size() != params.d()) throw ConfigError("prefix slot width does not match policy");
    kernels::axpy(w, slot, phi);
  }
  return phi;
}

std::vector<LogProb> step_log_probs(const PolicyParams& params, const StepContext& ctx) {
  return logits_to_log_probs(params, step_features(params, ctx));
}

SequenceEval forward_sequence(const PolicyParams& params, std::span<const double> visual,
                              const TokenSeq& x, const TokenSeq& y) {
  check_visual(params, visual);
  validate_sequence(y, params.vocab());
  const auto pmean = prompt_mean(params, x);
  SequenceEval eval;
  eval.steps.reserve(y.tokens.size());
  for (std::size_t i = 0; i < y.tokens.size(); ++i) {
    const TokenId target = y.tokens[i];
    if (target >= params.vocab().size) throw InvalidInput("response token outside vocab");
    StepEval step;
    step.window_tokens = window_tokens(params, std::span<const TokenId>(y.tokens).first(i));
    step.phi = compute_phi(params, visual, pmean, step.window_tokens);
    step.log_probs = logits_to_log_probs(params, step.phi);
    eval.total += step.log_probs[target];
    eval.steps.push_back(std::move(step));
  }
  return eval;
}

void backward_step(const PolicyParams& params, std::span<const double> visual, const TokenSeq& x,
                   const StepEval& step, std::span<const double> dlogits, double scale,
                   PolicyGrad& grad) {
  const auto& out = params.blocks().out;
  // d out = scale * dlogits (x) phi
  kernels::rank1(grad.out, scale, dlogits, step.phi);
  // d phi = scale * out^T dlogits
  std::vector<double> dphi(params.d(), 0.0);
  kernels::gemv_t_acc(out, dlogits, dphi);
  // d visual_proj[j, :] += v[j] * dphi
  kernels::rank1(grad.visual_proj, scale, visual, dphi);
  if (!x.tokens.empty()) {
    const double w = scale / static_cast<double>(x.tokens.size());
    for (TokenId t : x.tokens) kernels::axpy(w, dphi, grad.embed.row(t));
  }
  const double ww = scale / static_cast<double>(params.window());
  for (TokenId t : step.window_tokens) kernels::axpy(ww, dphi, grad.embed.row(t));
}

LogProb sequence_log_prob(const PolicyParams& params, std::span<const double> visual,
                          const TokenSeq& x, const TokenSeq& y) {
  return forward_sequence(params, visual, x, y).total;
}

void accumulate_sequence_grad(const PolicyParams& params, std::span<const double> visual,
                              const TokenSeq& x, const TokenSeq& y, double scale,
                              PolicyGrad& grad) {
  const SequenceEval eval = forward_sequence(params, visual, x, y);
  std::vector<double> dlogits(params.vocab().size);
  for (std::size_t i = 0; i < eval.steps.size(); ++i) {
    const auto& lp = eval.steps[i].log_probs;
    for (std::size_t k = 0; k < lp.size(); ++k) dlogits[k] = -std::exp(lp[k]);
    dlogits[y.tokens[i]] += 1.0;
    backward_step(params, visual, x, eval.steps[i], dlogits, scale, grad);
  }
}

PolicyGrad grad_sequence_log_prob(const PolicyParams& params, std::span<const double> visual,
                                  const TokenSeq& x, const TokenSeq& y) {
  if (params.frozen()) throw ContractViolation("gradient requested for frozen policy");
  PolicyGrad grad = ParamBlocks::zeros(params.vocab().size, params.d(), params.d_v());
  accumulate_sequence_grad(params, visual, x, y, 1.0, grad);
  return grad;
}

// --- dump / load ------------------------------------------------------------

namespace {

constexpr std::string_view kMagic = "hdpo-policy";
constexpr int kFormatVersion = 1;

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

void expect_word(std::istream& in, std::string_view word) {
  std::string got;
  if (!(in >> got) || got != word) {
    throw InvalidInput("policy dump: expected '" + std::string(word) + "', got '" + got + "'");
  }
}

}  // namespace

void write_params(std::ostream& out, const PolicyParams& params) {
  const Vocab& v = params.vocab();
  out << kMagic << ' ' << kFormatVersion << '\n'
      << "vocab " << v.size << ' ' << v.bos_id << ' ' << v.eos_id << '\n'
      << "dims " << params.d() << ' ' << params.d_v() << ' ' << params.window() << '\n'
      << "seed " << params.seed() << '\n'
      << "frozen " << (params.frozen() ? 1 : 0) << '\n';
  for (std::size_t b = 0; b < ParamBlocks::kNumBlocks; ++b) {
    const Matrix& m = params.blocks().block(b);
    out << ParamBlocks::kBlockNames[b] << ' ' << m.rows << ' ' << m.cols << '\n';
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t c = 0; c < m.cols; ++c) out << (c ? " " : "") << hexfloat(m(r, c));
      out << '\n';
    }
  }
}

PolicyParams read_params(std::istream& in) {
  expect_word(in, kMagic);
  int version = 0;
  in >> version;
  if (version != kFormatVersion) throw InvalidInput("policy dump: unsupported version");
  Vocab vocab;
  std::size_t d = 0, d_v = 0, window = 0;
  std::uint64_t seed = 0;
  int frozen = 0;
  expect_word(in, "vocab");
  in >> vocab.size >> vocab.bos_id >> vocab.eos_id;
  expect_word(in, "dims");
  in >> d >> d_v >> window;
  expect_word(in, "seed");
  in >> seed;
  expect_word(in, "frozen");
  in >> frozen;
  if (!in) throw InvalidInput("policy dump: malformed header");
  PolicyParams p(vocab, d, d_v, window, seed);
  for (std::size_t b = 0; b < ParamBlocks::kNumBlocks; ++b) {
    expect_word(in, ParamBlocks::kBlockNames[b]);
    std::size_t rows = 0, cols = 0;
    in >> rows >> cols;
    Matrix& m = p.blocks_.block(b);
    if (rows != m.rows || cols != m.cols) throw InvalidInput("policy dump: block shape mismatch");
    std::string tok;
    for (double& v : m.data) {
      if (!(in >> tok)) throw InvalidInput("policy dump: truncated block");
      char* end = nullptr;
      v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') throw InvalidInput("policy dump: bad value '" + tok + "'");
    }
  }
  p.frozen_ = frozen != 0;
  return p;
}

void save_params(const std::string& path, const PolicyParams& params) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  write_params(out, params);
}

PolicyParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return read_params(in);
}

}  // namespace hdpo
