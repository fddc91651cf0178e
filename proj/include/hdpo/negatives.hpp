#pragma once

// Rejected visual samples at video, clip and object level, and assembly of a
// full preference record from a source video and its annotation.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hdpo/record.hpp"
#include "hdpo/video.hpp"

namespace hdpo {

enum class VisualLevel { video, clip, object };

struct NegativeStrategy {
  VisualLevel level;
  NegativeKind kind;
  bool operator==(const NegativeStrategy&) const = default;
};

std::string_view level_name(VisualLevel level) noexcept;
std::string_view kind_name(NegativeKind kind) noexcept;
std::optional<NegativeKind> parse_kind(std::string_view name) noexcept;
std::optional<VisualLevel> parse_level(std::string_view name) noexcept;

// The 13 supported (level, kind) pairs.
const std::vector<NegativeStrategy>& supported_strategies();
bool is_supported(NegativeStrategy s) noexcept;

// Reversed frame order; segment [s, e] becomes [T-1-e, T-1-s].
SyntheticVideo reverse_frames(const SyntheticVideo& video);

SyntheticVideo blackout(const SyntheticVideo& video);

// Positions chosen by random_frame_mask: a partial Fisher-Yates shuffle of
// 0..T-1 driven by mt19937_64(seed), swapping i with i + rng() % (T - i) for
// i < ceil(T/2). Returned in draw order.
std::vector<int> random_mask_positions(int num_frames, std::uint64_t seed);
SyntheticVideo random_frame_mask(const SyntheticVideo& video, std::uint64_t seed);

// Uniform over the other batch entries. Throws InvalidInput for batches < 2.
std::size_t sample_batch_index(std::size_t batch_size, std::size_t self_index, std::uint64_t seed);
SyntheticVideo sample_batch_negative(std::span<const SyntheticVideo> batch, std::size_t self_index,
                                     std::uint64_t seed);

// Frames outside [start, end], order preserved.
SyntheticVideo relevant_complement_segments(const SyntheticVideo& video,
                                            const EventSegment& segment);

// Both take a single-frame (keyframe) video.
SyntheticVideo roi_mask(const SyntheticVideo& keyframe_video, int object_id);
// Moves the object to a seeded bbox in a different featurizer bin, keeping w and h.
// Throws ConstraintError when no other bin can hold the box.
SyntheticVideo roi_move(const SyntheticVideo& keyframe_video, int object_id, std::uint64_t seed,
                        const Featurizer& featurizer);

// A source video with the annotation anchors negatives need.
struct VisualAnchor {
  SyntheticVideo video;
  EventSegment event;
  int keyframe = 0;
  int key_object_id = 0;
};

struct PreferenceTexts {
  std::string source_id;
  HallucinationCategory category = HallucinationCategory::Object;
  TokenSeq prompt;
  TokenSeq chosen;
  TokenSeq rejected_relevant;
  TokenSeq rejected_irrelevant;
};

// Candidates for randomness negatives; `self_index` is the anchor's own slot.
struct NegativePool {
  std::span<const VisualAnchor> anchors;
  std::size_t self_index = 0;
};

SyntheticVideo make_negative(const VisualAnchor& anchor, NegativeStrategy strategy,
                             std::uint64_t seed, const Featurizer& featurizer,
                             const NegativePool& pool = {});

PreferenceRecord make_preference_record(const VisualAnchor& anchor, PreferenceTexts texts,
                                        const StrategySet& strategies, std::uint64_t seed,
                                        const Featurizer& featurizer,
                                        const NegativePool& pool = {});

}  // namespace hdpo
