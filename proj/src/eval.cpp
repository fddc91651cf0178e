#include "hdpo/eval.hpp"

#include <algorithm>

#include "hdpo/error.hpp"
#include "hdpo/negatives.hpp"
#include "hdpo/world.hpp"

namespace hdpo {

namespace {

void require_nonempty(std::span<const PreferenceRecord> corpus) {
  if (corpus.empty()) throw InvalidInput("evaluation corpus is empty");
}

double fraction(std::size_t hits, std::size_t n) {
  return n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
}

const SyntheticVideo& source_video(const PreferenceRecord& rec) { return rec.video.chosen.video; }

// Class of the object carrying `action` as an attribute inside `segment`.
std::optional<TokenId> performer(const SyntheticVideo& video, const EventSegment& segment) {
  for (int p = segment.start; p <= segment.end; ++p) {
    for (const auto& o : video.frames[static_cast<std::size_t>(p)].objects) {
      const auto& at = o.attribute_tokens;
      if (std::find(at.begin(), at.end(), segment.event_token) != at.end()) return o.class_token;
    }
  }
  return std::nullopt;
}

}  // namespace

PreferenceEval eval_preference_accuracy(const PolicyParams& params,
                                        std::span<const PreferenceRecord> corpus) {
  require_nonempty(corpus);
  PreferenceEval out;
  std::map<std::string, std::pair<std::size_t, std::size_t>> cats;
  std::size_t hits = 0;
  double margin_sum = 0.0;
  for (const auto& r : corpus) {
    const auto& v = r.video.chosen.features;
    const double w = sequence_log_prob(params, v, r.prompt, r.chosen);
    const double re = sequence_log_prob(params, v, r.prompt, r.rejected_relevant);
    const double ir = sequence_log_prob(params, v, r.prompt, r.rejected_irrelevant);
    const double margin = w - std::max(re, ir);
    const bool ok = margin > 0.0;
    hits += ok;
    margin_sum += margin;
    auto& c = cats[std::string(category_name(r.category))];
    c.first += ok;
    ++c.second;
  }
  out.count = corpus.size();
  out.accuracy = fraction(hits, corpus.size());
  out.mean_margin = margin_sum / static_cast<double>(corpus.size());
  for (const auto& [name, hc] : cats) out.per_category[name] = fraction(hc.first, hc.second);
  return out;
}

TemporalProbe temporal_probe(const PolicyParams& params, const PreferenceRecord& rec,
                             const Featurizer& featurizer) {
  const SyntheticVideo& video = source_video(rec);
  const EventSegment& event = rec.event;

  // Distractor: the first other segment, and who performs it.
  std::optional<EventSegment> other;
  for (const auto& s : video.segments) {
    if (!(s == event)) {
      other = s;
      break;
    }
  }
  std::map<TokenId, TokenId> swap;
  if (other && other->event_token != event.event_token) {
    swap[event.event_token] = other->event_token;
    swap[other->event_token] = event.event_token;
    const auto actor = performer(video, event);
    const auto distractor = performer(video, *other);
    if (actor && distractor && *actor != *distractor) {
      swap[*actor] = *distractor;
      swap[*distractor] = *actor;
    }
  }
  TokenSeq swapped = rec.chosen;
  for (TokenId& t : swapped.tokens) {
    if (auto it = swap.find(t); it != swap.end()) t = it->second;
  }

  TemporalProbe probe;
  probe.order_sensitive = swapped != rec.chosen;
  const TokenSeq& alternative = probe.order_sensitive ? swapped : rec.rejected_relevant;

  const auto window_features = [&](const SyntheticVideo& v) {
    return featurizer.featurize_video(extract_clip(v, event)).pooled;
  };
  const auto orig = window_features(video);
  const auto rev = window_features(reverse_frames(video));
  const auto lp = [&](const std::vector<double>& f, const TokenSeq& y) {
    return sequence_log_prob(params, f, rec.prompt, y);
  };
  probe.original_margin = lp(orig, rec.chosen) - lp(orig, alternative);
  probe.reversed_margin = probe.order_sensitive ? lp(rev, alternative) - lp(rev, rec.chosen)
                                                : probe.original_margin;
  return probe;
}

TemporalEval eval_temporal_adversarial(const PolicyParams& params,
                                       std::span<const PreferenceRecord> corpus,
                                       const Featurizer& featurizer) {
  require_nonempty(corpus);
  std::size_t orig_hits = 0, rev_hits = 0;
  for (const auto& r : corpus) {
    const auto p = temporal_probe(params, r, featurizer);
    orig_hits += p.original_margin > 0.0;
    rev_hits += p.reversed_margin > 0.0;
  }
  TemporalEval out;
  out.count = corpus.size();
  out.original_accuracy = fraction(orig_hits, corpus.size());
  out.reversed_accuracy = fraction(rev_hits, corpus.size());
  out.drop = out.original_accuracy - out.reversed_accuracy;
  return out;
}

double spatial_shift(const PolicyParams& params, const PreferenceRecord& rec,
                     const Featurizer& featurizer) {
  const SyntheticVideo& key = rec.object.chosen.video;
  const auto masked = featurizer.featurize_video(roi_mask(key, rec.key_object_id)).pooled;
  return sequence_log_prob(params, rec.object.chosen.features, rec.prompt, rec.chosen) -
         sequence_log_prob(params, masked, rec.prompt, rec.chosen);
}

SpatialEval eval_spatial_adversarial(const PolicyParams& params,
                                     std::span<const PreferenceRecord> corpus,
                                     const Featurizer& featurizer) {
  require_nonempty(corpus);
  SpatialEval out;
  std::size_t hits = 0;
  double sum = 0.0;
  for (const auto& r : corpus) {
    const double s = spatial_shift(params, r, featurizer);
    hits += s > 0.0;
    sum += s;
  }
  out.count = corpus.size();
  out.accuracy = fraction(hits, corpus.size());
  out.loglik_shift = sum / static_cast<double>(corpus.size());
  return out;
}

std::optional<TokenSeq> token_swap_variant(const PreferenceRecord& rec, const Lexicon& lexicon) {
  const TokenId action = rec.event.event_token;
  auto it = std::find(rec.chosen.tokens.begin(), rec.chosen.tokens.end(), action);
  if (it == rec.chosen.tokens.end() || action >= lexicon.size()) return std::nullopt;
  const auto syn = near_synonym(lexicon.word(action));
  if (!syn) return std::nullopt;
  const auto syn_id = lexicon.find(*syn);
  if (!syn_id) return std::nullopt;
  TokenSeq edited = rec.chosen;
  edited.tokens[static_cast<std::size_t>(it - rec.chosen.tokens.begin())] = *syn_id;
  return edited;
}

TokenEval eval_token_adversarial(const PolicyParams& params,
                                 std::span<const PreferenceRecord> corpus, const Lexicon& lexicon) {
  require_nonempty(corpus);
  TokenEval out;
  std::size_t hits = 0;
  for (const auto& r : corpus) {
    const auto edited = token_swap_variant(r, lexicon);
    if (!edited) continue;
    const auto& v = r.video.chosen.features;
    hits += sequence_log_prob(params, v, r.prompt, r.chosen) >
            sequence_log_prob(params, v, r.prompt, *edited);
    ++out.count;
  }
  out.accuracy = fraction(hits, out.count);
  return out;
}

EvalReport evaluate(const PolicyParams& params, std::span<const PreferenceRecord> corpus,
                    const Lexicon& lexicon, const Featurizer& featurizer) {
  return {eval_preference_accuracy(params, corpus),
          eval_temporal_adversarial(params, corpus, featurizer),
          eval_spatial_adversarial(params, corpus, featurizer),
          eval_token_adversarial(params, corpus, lexicon)};
}

nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["records"] = r.preference.count;
  j["preference_accuracy"] = r.preference.accuracy;
  j["mean_margin"] = r.preference.mean_margin;
  nlohmann::ordered_json cats = nlohmann::ordered_json::object();
  for (const auto& [name, acc] : r.preference.per_category) cats[name] = acc;
  j["per_category"] = std::move(cats);
  nlohmann::ordered_json adv;
  adv["temporal_original_acc"] = r.temporal.original_accuracy;
  adv["temporal_reverse_acc"] = r.temporal.reversed_accuracy;
  adv["temporal_drop"] = r.temporal.drop;
  adv["spatial_mask_acc"] = r.spatial.accuracy;
  adv["token_swap_acc"] = r.token.accuracy;
  adv["token_swap_records"] = r.token.count;
  j["adversarial"] = std::move(adv);
  j["loglik_shift"] = r.spatial.loglik_shift;
  return j;
}

}  // namespace hdpo
