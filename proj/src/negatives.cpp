#include "hdpo/negatives.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "hdpo/error.hpp"

namespace hdpo {

std::string_view level_name(VisualLevel level) noexcept {
  switch (level) {
    case VisualLevel::video: return "video";
    case VisualLevel::clip: return "clip";
    case VisualLevel::object: return "object";
  }
  return "?";
}

std::string_view kind_name(NegativeKind kind) noexcept {
  switch (kind) {
    case NegativeKind::randomness: return "randomness";
    case NegativeKind::blackness: return "blackness";
    case NegativeKind::reverse: return "reverse";
    case NegativeKind::random_mask: return "random_mask";
    case NegativeKind::relevant_segments: return "relevant_segments";
    case NegativeKind::roi_mask: return "roi_mask";
    case NegativeKind::roi_move: return "roi_move";
  }
  return "?";
}

std::optional<NegativeKind> parse_kind(std::string_view name) noexcept {
  for (auto k : {NegativeKind::randomness, NegativeKind::blackness, NegativeKind::reverse,
                 NegativeKind::random_mask, NegativeKind::relevant_segments,
                 NegativeKind::roi_mask, NegativeKind::roi_move}) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::optional<VisualLevel> parse_level(std::string_view name) noexcept {
  for (auto l : {VisualLevel::video, VisualLevel::clip, VisualLevel::object}) {
    if (level_name(l) == name) return l;
  }
  return std::nullopt;
}

const std::vector<NegativeStrategy>& supported_strategies() {
  using L = VisualLevel;
  using K = NegativeKind;
  static const std::vector<NegativeStrategy> all = {
      {L::video, K::randomness},  {L::video, K::blackness},         {L::video, K::reverse},
      {L::video, K::random_mask}, {L::clip, K::randomness},         {L::clip, K::blackness},
      {L::clip, K::reverse},      {L::clip, K::random_mask},        {L::clip, K::relevant_segments},
      {L::object, K::randomness}, {L::object, K::blackness},        {L::object, K::roi_mask},
      {L::object, K::roi_move},
  };
  return all;
}

bool is_supported(NegativeStrategy s) noexcept {
  const auto& all = supported_strategies();
  return std::find(all.begin(), all.end(), s) != all.end();
}

// --- video / clip level -----------------------------------------------------

SyntheticVideo reverse_frames(const SyntheticVideo& video) {
  if (video.num_frames() < 2) throw InvalidInput("reverse needs at least 2 frames");
  SyntheticVideo out = video;
  std::reverse(out.frames.begin(), out.frames.end());
  const int last = video.num_frames() - 1;
  for (auto& s : out.segments) s = {last - s.end, last - s.start, s.event_token};
  return out;
}

SyntheticVideo blackout(const SyntheticVideo& video) {
  SyntheticVideo out = video;
  for (auto& f : out.frames) f.blacked_out = true;
  return out;
}

std::vector<int> random_mask_positions(int num_frames, std::uint64_t seed) {
  if (num_frames < 2) throw InvalidInput("random mask needs at least 2 frames");
  std::vector<int> order(static_cast<std::size_t>(num_frames));
  for (int i = 0; i < num_frames; ++i) order[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  const int masked = (num_frames + 1) / 2;
  for (int i = 0; i < masked; ++i) {
    const auto span = static_cast<std::uint64_t>(num_frames - i);
    const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng() % span);
    std::swap(order[static_cast<std::size_t>(i)], order[j]);
  }
  order.resize(static_cast<std::size_t>(masked));
  return order;
}

SyntheticVideo random_frame_mask(const SyntheticVideo& video, std::uint64_t seed) {
  SyntheticVideo out = video;
  for (int pos : random_mask_positions(video.num_frames(), seed)) {
    out.frames[static_cast<std::size_t>(pos)].blacked_out = true;
  }
  return out;
}

std::size_t sample_batch_index(std::size_t batch_size, std::size_t self_index, std::uint64_t seed) {
  if (batch_size < 2) throw InvalidInput("batch negative needs a batch of at least 2");
  if (self_index >= batch_size) throw InvalidInput("self index outside batch");
  std::mt19937_64 rng(seed);
  const auto j = static_cast<std::size_t>(rng() % (batch_size - 1));
  return j >= self_index ? j + 1 : j;
}

SyntheticVideo sample_batch_negative(std::span<const SyntheticVideo> batch, std::size_t self_index,
                                     std::uint64_t seed) {
  return batch[sample_batch_index(batch.size(), self_index, seed)];
}

SyntheticVideo relevant_complement_segments(const SyntheticVideo& video,
                                            const EventSegment& segment) {
  const int T = video.num_frames();
  if (segment.start < 0 || segment.start > segment.end || segment.end >= T) {
    throw InvalidInput("event segment outside video");
  }
  if (segment.start == 0 && segment.end == T - 1) {
    throw InvalidInput("event segment covers the whole video; no complement frames");
  }
  const int removed = segment.length();
  const auto new_pos = [&](int p) { return p < segment.start ? p : p - removed; };
  const auto outside = [&](int p) { return p < segment.start || p > segment.end; };

  SyntheticVideo out;
  out.video_id = video.video_id;
  for (int p = 0; p < T; ++p) {
    if (outside(p)) out.frames.push_back(video.frames[static_cast<std::size_t>(p)]);
  }
  for (const auto& s : video.segments) {
    int lo = -1, hi = -1;
    for (int p = s.start; p <= s.end; ++p) {
      if (!outside(p)) continue;
      if (lo < 0) lo = new_pos(p);
      hi = new_pos(p);
    }
    if (lo >= 0) out.segments.push_back({lo, hi, s.event_token});
  }
  return out;
}

// --- object level -----------------------------------------------------------

namespace {

std::pair<Frame*, std::size_t> locate(SyntheticVideo& keyframe_video, int object_id) {
  if (keyframe_video.num_frames() != 1) {
    throw InvalidInput("ROI operations expect a single-frame keyframe video");
  }
  Frame& f = keyframe_video.frames.front();
  for (std::size_t i = 0; i < f.objects.size(); ++i) {
    if (f.objects[i].object_id == object_id) return {&f, i};
  }
  throw InvalidInput("object " + std::to_string(object_id) + " not present in keyframe");
}

}  // namespace

SyntheticVideo roi_mask(const SyntheticVideo& keyframe_video, int object_id) {
  SyntheticVideo out = keyframe_video;
  auto [frame, i] = locate(out, object_id);
  frame->objects.erase(frame->objects.begin() + static_cast<std::ptrdiff_t>(i));
  return out;
}

SyntheticVideo roi_move(const SyntheticVideo& keyframe_video, int object_id, std::uint64_t seed,
                        const Featurizer& featurizer) {
  SyntheticVideo out = keyframe_video;
  auto [frame, i] = locate(out, object_id);
  SceneObject& obj = frame->objects[i];
  const BBox old = obj.bbox;
  const std::size_t g = featurizer.config().grid;
  const std::size_t old_bin = featurizer.bbox_bin(old);

  // Feasible centre ranges keep the box inside the unit square.
  const double cx_lo = 0.5 * old.w, cx_hi = 1.0 - 0.5 * old.w;
  const double cy_lo = 0.5 * old.h, cy_hi = 1.0 - 0.5 * old.h;
  const double cell = 1.0 / static_cast<double>(g);

  struct Candidate {
    std::size_t bin;
    double x_lo, x_hi, y_lo, y_hi;
  };
  std::vector<Candidate> candidates;
  for (std::size_t row = 0; row < g; ++row) {
    for (std::size_t col = 0; col < g; ++col) {
      const std::size_t bin = row * g + col;
      if (bin == old_bin) continue;
      const double xl = std::max(cx_lo, col * cell), xh = std::min(cx_hi, (col + 1) * cell);
      const double yl = std::max(cy_lo, row * cell), yh = std::min(cy_hi, (row + 1) * cell);
      if (xl < xh && yl < yh) candidates.push_back({bin, xl, xh, yl, yh});
    }
  }
  if (candidates.empty()) {
    throw ConstraintError("no alternative bin can hold object " + std::to_string(object_id));
  }

  std::mt19937_64 rng(seed);
  const Candidate& c = candidates[static_cast<std::size_t>(rng() % candidates.size())];
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto place = [&](double cx, double cy) {
    BBox b = old;
    b.x = std::clamp(cx - 0.5 * old.w, 0.0, 1.0 - old.w);
    b.y = std::clamp(cy - 0.5 * old.h, 0.0, 1.0 - old.h);
    while (b.x + b.w > 1.0) b.x = std::nextafter(b.x, 0.0);
    while (b.y + b.h > 1.0) b.y = std::nextafter(b.y, 0.0);
    return b;
  };
  // Sample strictly inside the intersection; fall back to its centre if a
  // draw lands on a cell edge after rounding.
  const double u = 0.05 + 0.9 * unit(rng), v = 0.05 + 0.9 * unit(rng);
  BBox moved = place(c.x_lo + u * (c.x_hi - c.x_lo), c.y_lo + v * (c.y_hi - c.y_lo));
  if (!moved.valid() || featurizer.bbox_bin(moved) != c.bin) {
    moved = place(0.5 * (c.x_lo + c.x_hi), 0.5 * (c.y_lo + c.y_hi));
  }
  if (!moved.valid() || featurizer.bbox_bin(moved) == old_bin) {
    throw ConstraintError("could not place object " + std::to_string(object_id) + " in a new bin");
  }
  obj.bbox = moved;
  return out;
}

// --- record assembly --------------------------------------------------------

namespace {

constexpr std::uint64_t kVideoSalt = 0x76696465ULL;
constexpr std::uint64_t kClipSalt = 0x636c6970ULL;
constexpr std::uint64_t kObjectSalt = 0x6f626a65ULL;

std::uint64_t level_seed(std::uint64_t seed, VisualLevel level) {
  switch (level) {
    case VisualLevel::video: return splitmix64(seed ^ kVideoSalt);
    case VisualLevel::clip: return splitmix64(seed ^ kClipSalt);
    case VisualLevel::object: return splitmix64(seed ^ kObjectSalt);
  }
  return seed;
}

const VisualAnchor& pool_pick(const NegativePool& pool, std::uint64_t seed) {
  return pool.anchors[sample_batch_index(pool.anchors.size(), pool.self_index, seed)];
}

// Equal up to summation-order rounding; a reordered video pools to the same mean.
bool same_features(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > 1e-12 * std::max(1.0, std::abs(a[i]))) return false;
  }
  return true;
}

Visual featurized(SyntheticVideo v, const Featurizer& f) {
  auto feats = f.featurize_video(v).pooled;
  return {std::move(v), std::move(feats)};
}

}  // namespace

SyntheticVideo make_negative(const VisualAnchor& anchor, NegativeStrategy strategy,
                             std::uint64_t seed, const Featurizer& featurizer,
                             const NegativePool& pool) {
  if (!is_supported(strategy)) {
    throw InvalidInput("strategy '" + std::string(kind_name(strategy.kind)) +
                       "' is not available at " + std::string(level_name(strategy.level)) +
                       " level");
  }
  using K = NegativeKind;
  switch (strategy.level) {
    case VisualLevel::video:
      switch (strategy.kind) {
        case K::randomness: return pool_pick(pool, seed).video;
        case K::blackness: return blackout(anchor.video);
        case K::reverse: return reverse_frames(anchor.video);
        default: return random_frame_mask(anchor.video, seed);
      }
    case VisualLevel::clip: {
      if (strategy.kind == K::randomness) {
        const auto& other = pool_pick(pool, seed);
        return extract_clip(other.video, other.event);
      }
      if (strategy.kind == K::relevant_segments) {
        return relevant_complement_segments(anchor.video, anchor.event);
      }
      const SyntheticVideo clip = extract_clip(anchor.video, anchor.event);
      switch (strategy.kind) {
        case K::blackness: return blackout(clip);
        case K::reverse: return reverse_frames(clip);
        default: return random_frame_mask(clip, seed);
      }
    }
    case VisualLevel::object: {
      if (strategy.kind == K::randomness) {
        const auto& other = pool_pick(pool, seed);
        return extract_keyframe(other.video, other.keyframe);
      }
      const SyntheticVideo key = extract_keyframe(anchor.video, anchor.keyframe);
      switch (strategy.kind) {
        case K::blackness: return blackout(key);
        case K::roi_mask: return roi_mask(key, anchor.key_object_id);
        default: return roi_move(key, anchor.key_object_id, seed, featurizer);
      }
    }
  }
  throw InvalidInput("unknown visual level");
}

PreferenceRecord make_preference_record(const VisualAnchor& anchor, PreferenceTexts texts,
                                        const StrategySet& strategies, std::uint64_t seed,
                                        const Featurizer& featurizer, const NegativePool& pool) {
  anchor.video.validate();
  PreferenceRecord rec;
  rec.source_id = std::move(texts.source_id);
  rec.category = texts.category;
  rec.strategies = strategies;
  rec.prompt = std::move(texts.prompt);
  rec.chosen = std::move(texts.chosen);
  rec.rejected_relevant = std::move(texts.rejected_relevant);
  rec.rejected_irrelevant = std::move(texts.rejected_irrelevant);
  rec.event = anchor.event;
  rec.keyframe = anchor.keyframe;
  rec.key_object_id = anchor.key_object_id;

  const auto build = [&](VisualLevel level, NegativeKind kind, SyntheticVideo chosen) {
    VisualPair pair;
    pair.chosen = featurized(std::move(chosen), featurizer);
    pair.rejected = featurized(
        make_negative(anchor, {level, kind}, level_seed(seed, level), featurizer, pool), featurizer);
    if (same_features(pair.chosen.features, pair.rejected.features)) {
      rec.warnings.push_back("degenerate contrast at " + std::string(level_name(level)) +
                             " level (" + std::string(kind_name(kind)) + ")");
    }
    return pair;
  };
  rec.video = build(VisualLevel::video, strategies.video, anchor.video);
  rec.clip = build(VisualLevel::clip, strategies.clip, extract_clip(anchor.video, anchor.event));
  rec.object = build(VisualLevel::object, strategies.object,
                     extract_keyframe(anchor.video, anchor.keyframe));
  return rec;
}

}  // namespace hdpo
