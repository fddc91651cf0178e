#pragma once

// Corpus schema: hallucination taxonomy, annotation records (one JSON line
// each) and the tokenized, visually-paired training records built from them.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hdpo/policy.hpp"
#include "hdpo/video.hpp"

namespace hdpo {

enum class HallucinationCategory {
  Object,
  Number,
  Location,
  Color,
  StaticRelation,
  OCR,
  Action,
  DynamicAttribute,
  DynamicRelation,
  Sequence,
};

enum class HallucinationDimension { Perception, Temporal };

inline constexpr std::array<HallucinationCategory, 10> kAllCategories = {
    HallucinationCategory::Object,           HallucinationCategory::Number,
    HallucinationCategory::Location,         HallucinationCategory::Color,
    HallucinationCategory::StaticRelation,   HallucinationCategory::OCR,
    HallucinationCategory::Action,           HallucinationCategory::DynamicAttribute,
    HallucinationCategory::DynamicRelation,  HallucinationCategory::Sequence,
};

// The first six categories are Perception, the last four Temporal.
constexpr HallucinationDimension dimension_of(HallucinationCategory c) noexcept {
  return static_cast<int>(c) < 6 ? HallucinationDimension::Perception
                                 : HallucinationDimension::Temporal;
}

std::string_view category_name(HallucinationCategory c) noexcept;
std::string_view dimension_name(HallucinationDimension d) noexcept;
std::optional<HallucinationCategory> parse_category(std::string_view name) noexcept;

struct KeyframeObject {
  std::string label;
  BBox bbox;
  bool operator==(const KeyframeObject&) const = default;
};

struct Keyframe {
  int frame_idx = 0;
  std::vector<KeyframeObject> objects;
  bool operator==(const Keyframe&) const = default;
};

struct SegmentLabel {
  int start = 0;
  int end = 0;
  std::string label;
  bool operator==(const SegmentLabel&) const = default;
};

// One corpus line. The first keyframe's first object is the key object; the
// first segment is the annotated event.
struct AnnotationRecord {
  std::string video_id;
  HallucinationCategory category = HallucinationCategory::Object;
  std::string question;
  std::string chosen;
  std::string rejected_relevant;
  std::string rejected_irrelevant;
  std::vector<Keyframe> keyframes;
  std::vector<SegmentLabel> segments;

  bool operator==(const AnnotationRecord&) const = default;
};

// Field names in serialization order.
inline constexpr std::array<std::string_view, 8> kAnnotationFields = {
    "video_id", "category", "question", "chosen", "rejected_relevant", "rejected_irrelevant",
    "keyframes", "segments"};

nlohmann::ordered_json annotation_to_json(const AnnotationRecord& rec);
// Throws InvalidInput naming the offending field.
AnnotationRecord annotation_from_json(const nlohmann::json& j);

// A visual sample with its featurization.
struct Visual {
  SyntheticVideo video;
  std::vector<double> features;  // pooled, length d_v
};

// Chosen / rejected visuals at one level.
struct VisualPair {
  Visual chosen;
  Visual rejected;
};

enum class NegativeKind {
  randomness,
  blackness,
  reverse,
  random_mask,
  relevant_segments,
  roi_mask,
  roi_move,
};

// Kind selected for each visual level.
struct StrategySet {
  NegativeKind video = NegativeKind::randomness;
  NegativeKind clip = NegativeKind::relevant_segments;
  NegativeKind object = NegativeKind::roi_mask;
  bool operator==(const StrategySet&) const = default;
};

struct PreferenceRecord {
  std::string source_id;  // video_id of the originating AnnotationRecord
  HallucinationCategory category = HallucinationCategory::Object;
  StrategySet strategies;

  TokenSeq prompt;
  TokenSeq chosen;
  TokenSeq rejected_relevant;
  TokenSeq rejected_irrelevant;

  VisualPair video;   // v_w = source video
  VisualPair clip;    // v_w = event clip
  VisualPair object;  // v_w = keyframe

  EventSegment event;
  int keyframe = 0;
  int key_object_id = 0;

  // Levels whose chosen and rejected visuals featurize identically (to 1e-12).
  std::vector<std::string> warnings;
};

}  // namespace hdpo
