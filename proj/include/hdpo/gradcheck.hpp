#pragma once

// Finite-difference checks of every loss term on small random instances.

#include <array>
#include <cstdint>
#include <string_view>

#include "hdpo/losses.hpp"
#include "hdpo/oracle.hpp"

namespace hdpo {

struct GradInstance {
  PolicyParams theta;
  PolicyParams reference;  // frozen
  PreferenceRecord record;
  LossWeights weights;
};

struct InstanceShape {
  std::size_t vocab = 12;
  std::size_t d = 6;
  std::size_t d_v = 4;
  double stddev = 0.5;
};

// Random prompt/responses over the vocabulary, random visual features for all
// six visuals, theta and reference drawn independently.
GradInstance random_grad_instance(std::uint64_t seed, const InstanceShape& shape = {});

enum class LossTerm { response, video, clip, object, token, total };
inline constexpr std::array<LossTerm, 6> kAllLossTerms = {
    LossTerm::response, LossTerm::video, LossTerm::clip,
    LossTerm::object,   LossTerm::token, LossTerm::total};
std::string_view term_name(LossTerm term) noexcept;

// Analytic gradient of one term as the training code computes it.
PolicyGrad analytic_term_grad(const GradInstance& inst, LossTerm term);

// The function whose finite differences the analytic gradient must match:
// the term's value with any stop-gradient part held at its value at
// inst.theta.
double surrogate_term_value(const GradInstance& inst, LossTerm term, const PolicyParams& at);

oracle::GradComparison check_term(const GradInstance& inst, LossTerm term,
                                  const oracle::FDConfig& fd = {});

}  // namespace hdpo
