#pragma once

// Linear-softmax autoregressive policy over a small vocabulary.
//
//   phi_i  = visual_proj^T v + mean(embed[x]) + (1/k) * sum(embed[last k prefix tokens])
//   logits = out * phi_i
//   log p(y_i | v, x, y_<i) = log_softmax(logits)[y_i]
//
// The prefix is [bos, y_0, ..., y_{i-1}]; the window holds its last k tokens,
// zero-padded on the left while the prefix is shorter than k.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hdpo/matrix.hpp"

namespace hdpo {

using TokenId = std::uint32_t;
using LogProb = double;

struct Vocab {
  std::size_t size = 0;
  TokenId bos_id = 0;
  TokenId eos_id = 1;

  void validate() const;
  bool operator==(const Vocab&) const = default;
};

enum class SeqRole { prompt, response };

struct TokenSeq {
  std::vector<TokenId> tokens;
  SeqRole role = SeqRole::response;

  static TokenSeq prompt(std::vector<TokenId> t) { return {std::move(t), SeqRole::prompt}; }
  static TokenSeq response(std::vector<TokenId> t) { return {std::move(t), SeqRole::response}; }

  std::size_t size() const noexcept { return tokens.size(); }
  bool operator==(const TokenSeq&) const = default;
};

// Throws InvalidInput on empty sequences, out-of-range ids, or a response
// that does not end in eos.
void validate_sequence(const TokenSeq& seq, const Vocab& vocab);

// The three trainable blocks. Gradients share this shape.
struct ParamBlocks {
  Matrix embed;        // vocab x d
  Matrix visual_proj;  // d_v x d
  Matrix out;          // vocab x d

  static ParamBlocks zeros(std::size_t vocab, std::size_t d, std::size_t d_v);

  static constexpr std::size_t kNumBlocks = 3;
  static constexpr std::string_view kBlockNames[kNumBlocks] = {"embed", "visual_proj", "out"};

  Matrix& block(std::size_t i);
  const Matrix& block(std::size_t i) const;

  std::size_t size() const noexcept { return embed.size() + visual_proj.size() + out.size(); }
  // Flat view by global index, blocks in kBlockNames order.
  double& at(std::size_t flat);
  double at(std::size_t flat) const;

  ParamBlocks& operator+=(const ParamBlocks& rhs);
  ParamBlocks& operator*=(double s);
  bool all_finite() const;
  bool operator==(const ParamBlocks&) const = default;
};

using PolicyGrad = ParamBlocks;

class PolicyParams {
 public:
  static constexpr std::size_t kDefaultDim = 16;
  static constexpr std::size_t kDefaultVisualDim = 8;
  static constexpr std::size_t kDefaultWindow = 2;

  // All-zero parameters.
  PolicyParams(Vocab vocab, std::size_t d = kDefaultDim, std::size_t d_v = kDefaultVisualDim,
               std::size_t window = kDefaultWindow, std::uint64_t seed = 0);

  // Entries drawn i.i.d. from N(0, stddev^2) with an mt19937_64 seeded by `seed`,
  // filling embed, visual_proj, out in row-major order.
  static PolicyParams gaussian(Vocab vocab, std::uint64_t seed, std::size_t d = kDefaultDim,
                               std::size_t d_v = kDefaultVisualDim, double stddev = 0.1,
                               std::size_t window = kDefaultWindow);

  const Vocab& vocab() const noexcept { return vocab_; }
  std::size_t d() const noexcept { return d_; }
  std::size_t d_v() const noexcept { return d_v_; }
  std::size_t window() const noexcept { return window_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool frozen() const noexcept { return frozen_; }

  const ParamBlocks& blocks() const noexcept { return blocks_; }
  // Throws ContractViolation when frozen.
  ParamBlocks& mutable_blocks();

  // FNV-1a over the raw bytes of every block.
  std::uint64_t checksum() const;

  bool same_shape(const PolicyParams& other) const;
  bool operator==(const PolicyParams&) const = default;

  friend PolicyParams freeze_reference(const PolicyParams& params);
  friend PolicyParams read_params(std::istream& in);

 private:
  Vocab vocab_;
  std::size_t d_;
  std::size_t d_v_;
  std::size_t window_;
  std::uint64_t seed_;
  bool frozen_ = false;
  ParamBlocks blocks_;
};

// Deep copy with frozen = true.
PolicyParams freeze_reference(const PolicyParams& params);

// Conditioning for one decoding step.
struct StepContext {
  std::vector<double> visual;                     // d_v
  std::vector<double> prompt_mean;                // d
  std::vector<std::vector<double>> prefix_window; // k slots of length d, oldest first
};

StepContext make_step_context(const PolicyParams& params, std::span<const double> visual,
                              const TokenSeq& x, std::span<const TokenId> prefix);

std::vector<double> step_features(const PolicyParams& params, const StepContext& ctx);

// Length vocab.size; throws ConfigError on dimension mismatch.
std::vector<LogProb> step_log_probs(const PolicyParams& params, const StepContext& ctx);

// In-place log-softmax.
void log_softmax_inplace(std::span<double> logits);

struct StepEval {
  std::vector<double> phi;
  std::vector<double> log_probs;
  std::vector<TokenId> window_tokens;  // occupied window slots only
};

struct SequenceEval {
  std::vector<StepEval> steps;
  LogProb total = 0.0;
};

// Forward pass keeping per-step state for backpropagation.
SequenceEval forward_sequence(const PolicyParams& params, std::span<const double> visual,
                              const TokenSeq& x, const TokenSeq& y);

// grad += scale * d<dlogits, logits_step>/d(params) for one evaluated step.
void backward_step(const PolicyParams& params, std::span<const double> visual, const TokenSeq& x,
                   const StepEval& step, std::span<const double> dlogits, double scale,
                   PolicyGrad& grad);

LogProb sequence_log_prob(const PolicyParams& params, std::span<const double> visual,
                          const TokenSeq& x, const TokenSeq& y);

// d log pi(y | v, x) / d params. Throws ContractViolation for frozen params.
PolicyGrad grad_sequence_log_prob(const PolicyParams& params, std::span<const double> visual,
                                  const TokenSeq& x, const TokenSeq& y);

// Adds scale * d log pi(y|v,x)/d params into grad without the frozen check;
// used by loss assembly where params are known trainable.
void accumulate_sequence_grad(const PolicyParams& params, std::span<const double> visual,
                              const TokenSeq& x, const TokenSeq& y, double scale, PolicyGrad& grad);

// Text dump. Values are written as hex floats so a write/read cycle is bit-exact.
void write_params(std::ostream& out, const PolicyParams& params);
PolicyParams read_params(std::istream& in);
void save_params(const std::string& path, const PolicyParams& params);
PolicyParams load_params(const std::string& path);

}  // namespace hdpo
