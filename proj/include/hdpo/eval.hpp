#pragma once

// Preference accuracy and adversarial probes over a trained policy.

#include <map>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "hdpo/lexicon.hpp"
#include "hdpo/policy.hpp"
#include "hdpo/record.hpp"
#include "hdpo/video.hpp"

namespace hdpo {

struct PreferenceEval {
  double accuracy = 0.0;
  double mean_margin = 0.0;  // log pi(y_w) - max(log pi(y_l^re), log pi(y_l^ir))
  std::map<std::string, double> per_category;
  std::size_t count = 0;
};

// A record counts as correct when log pi(y_w | v, x) strictly exceeds both
// rejected responses (ties fail). Throws InvalidInput on an empty corpus.
PreferenceEval eval_preference_accuracy(const PolicyParams& params,
                                        std::span<const PreferenceRecord> corpus);

// Temporal probe for one record. The policy is conditioned on the clip at the
// annotated event window, first in the original video and then in the reversed
// video. For order-sensitive records (the chosen answer mentions the actor or
// its action) the alternative answer swaps actor<->distractor and
// action<->distractor action, and reversal makes it the correct one.
// Order-insensitive records compare y_w against y_l^re on the original window
// and score the same in both directions.
struct TemporalProbe {
  bool order_sensitive = false;
  double original_margin = 0.0;  // correct - alternative, original video
  double reversed_margin = 0.0;  // correct - alternative, reversed video
};

TemporalProbe temporal_probe(const PolicyParams& params, const PreferenceRecord& rec,
                             const Featurizer& featurizer);

struct TemporalEval {
  double original_accuracy = 0.0;
  double reversed_accuracy = 0.0;
  double drop = 0.0;  // original - reversed
  std::size_t count = 0;
};

TemporalEval eval_temporal_adversarial(const PolicyParams& params,
                                       std::span<const PreferenceRecord> corpus,
                                       const Featurizer& featurizer);

// Key object masked out of the keyframe. Shift is the mean of
// log pi(y_w | keyframe) - log pi(y_w | masked keyframe); accuracy is the
// fraction of records where that difference is strictly positive.
struct SpatialEval {
  double accuracy = 0.0;
  double loglik_shift = 0.0;
  std::size_t count = 0;
};

double spatial_shift(const PolicyParams& params, const PreferenceRecord& rec,
                     const Featurizer& featurizer);

SpatialEval eval_spatial_adversarial(const PolicyParams& params,
                                     std::span<const PreferenceRecord> corpus,
                                     const Featurizer& featurizer);

// y_w with its event action replaced by a near-synonym ("run" -> "walk").
// nullopt when y_w has no action with a synonym in the lexicon.
std::optional<TokenSeq> token_swap_variant(const PreferenceRecord& rec, const Lexicon& lexicon);

struct TokenEval {
  double accuracy = 0.0;
  std::size_t count = 0;
};

// Fraction of records preferring y_w over its one-token edit on the source video.
TokenEval eval_token_adversarial(const PolicyParams& params,
                                 std::span<const PreferenceRecord> corpus, const Lexicon& lexicon);

struct EvalReport {
  PreferenceEval preference;
  TemporalEval temporal;
  SpatialEval spatial;
  TokenEval token;
};

EvalReport evaluate(const PolicyParams& params, std::span<const PreferenceRecord> corpus,
                    const Lexicon& lexicon, const Featurizer& featurizer);

nlohmann::ordered_json report_to_json(const EvalReport& report);

}  // namespace hdpo
