#pragma once

// Symbolic videos: frames hold typed objects with normalized bounding boxes,
// and event segments mark where annotated actions happen.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hdpo/policy.hpp"

namespace hdpo {

struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool valid() const noexcept;
  bool operator==(const BBox&) const = default;
};

struct SceneObject {
  int object_id = 0;
  TokenId class_token = 0;
  std::vector<TokenId> attribute_tokens;
  BBox bbox;

  bool operator==(const SceneObject&) const = default;
};

struct Frame {
  int index = 0;  // position in the source video; kept through extraction
  std::vector<SceneObject> objects;
  bool blacked_out = false;

  const SceneObject* find(int object_id) const;
  bool operator==(const Frame&) const = default;
};

// Inclusive frame-position range [start, end].
struct EventSegment {
  int start = 0;
  int end = 0;
  TokenId event_token = 0;

  int length() const noexcept { return end - start + 1; }
  bool operator==(const EventSegment&) const = default;
};

struct SyntheticVideo {
  std::string video_id;
  std::vector<Frame> frames;
  std::vector<EventSegment> segments;

  int num_frames() const noexcept { return static_cast<int>(frames.size()); }
  // Throws InvalidInput. Source videos need >= 2 frames; extracted ones >= 1.
  void validate(int min_frames = 2) const;
  bool operator==(const SyntheticVideo&) const = default;
};

struct VisualFeatures {
  std::vector<double> pooled;
  std::vector<std::vector<double>> per_frame;
};

struct FeatureConfig {
  std::size_t d_v = PolicyParams::kDefaultVisualDim;
  std::size_t grid = 3;  // bbox centers quantized to grid x grid bins
  std::uint64_t seed = 0x5eedf00dULL;
};

// Deterministic symbolic featurizer.
//
// A frame's feature is the sum over visible objects of
//   token_embed(class) + sum(token_embed(attr)) + bin_embed(bin(bbox)).
// Embedding entries are uniform in [-1, 1], derived by hashing (seed, table, id, dim).
class Featurizer {
 public:
  explicit Featurizer(FeatureConfig cfg = {});

  const FeatureConfig& config() const noexcept { return cfg_; }
  std::size_t num_bins() const noexcept { return cfg_.grid * cfg_.grid; }

  std::vector<double> token_embed(TokenId token) const;
  std::vector<double> hash_embed(TokenId class_token, std::span<const TokenId> attributes) const;
  std::size_t bbox_bin(const BBox& box) const;
  std::vector<double> bin_embed(std::size_t bin) const;
  std::vector<double> bbox_bin_embed(const BBox& box) const { return bin_embed(bbox_bin(box)); }

  std::vector<double> featurize_frame(const Frame& frame) const;
  VisualFeatures featurize_video(const SyntheticVideo& video) const;

 private:
  double hashed_unit(std::uint64_t table, std::uint64_t id, std::uint64_t dim) const;

  FeatureConfig cfg_;
};

// Frames [start..end] in order; segments overlapping the range are clipped and
// shifted to clip-local positions. Throws InvalidInput when out of range.
SyntheticVideo extract_clip(const SyntheticVideo& video, const EventSegment& segment);
SyntheticVideo extract_keyframe(const SyntheticVideo& video, int frame_index);

std::uint64_t splitmix64(std::uint64_t x) noexcept;

void to_json(nlohmann::json& j, const BBox& b);
void from_json(const nlohmann::json& j, BBox& b);
void to_json(nlohmann::json& j, const SceneObject& o);
void from_json(const nlohmann::json& j, SceneObject& o);
void to_json(nlohmann::json& j, const Frame& f);
void from_json(const nlohmann::json& j, Frame& f);
void to_json(nlohmann::json& j, const EventSegment& s);
void from_json(const nlohmann::json& j, EventSegment& s);
void to_json(nlohmann::json& j, const SyntheticVideo& v);
void from_json(const nlohmann::json& j, SyntheticVideo& v);

}  // namespace hdpo
