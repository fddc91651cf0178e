#include "hdpo/video.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "hdpo/error.hpp"
#include "hdpo/kernels.hpp"

namespace hdpo {

bool BBox::valid() const noexcept {
  return x >= 0.0 && y >= 0.0 && w > 0.0 && h > 0.0 && x + w <= 1.0 && y + h <= 1.0;
}

const SceneObject* Frame::find(int object_id) const {
  auto it = std::find_if(objects.begin(), objects.end(),
                         [&](const SceneObject& o) { return o.object_id == object_id; });
  return it == objects.end() ? nullptr : &*it;
}

void SyntheticVideo::validate(int min_frames) const {
  if (num_frames() < min_frames) {
    throw InvalidInput("video '" + video_id + "' has " + std::to_string(num_frames()) +
                       " frames, needs at least " + std::to_string(min_frames));
  }
  std::set<int> seen;
  for (const Frame& f : frames) {
    if (!seen.insert(f.index).second) {
      throw InvalidInput("video '" + video_id + "' repeats frame index " + std::to_string(f.index));
    }
    for (const SceneObject& o : f.objects) {
      if (!o.bbox.valid()) {
        throw InvalidInput("video '" + video_id + "' object " + std::to_string(o.object_id) +
                           " has an invalid bbox");
      }
    }
  }
  for (const EventSegment& s : segments) {
    if (s.start < 0 || s.start > s.end || s.end >= num_frames()) {
      throw InvalidInput("video '" + video_id + "' segment [" + std::to_string(s.start) + ", " +
                         std::to_string(s.end) + "] out of bounds");
    }
  }
}

// --- featurizer -------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {
constexpr std::uint64_t kTokenTable = 1;
constexpr std::uint64_t kBinTable = 2;
}  // namespace

Featurizer::Featurizer(FeatureConfig cfg) : cfg_(cfg) {
  if (cfg_.d_v == 0) throw ConfigError("feature width must be positive");
  if (cfg_.grid == 0) throw ConfigError("bbox grid must be positive");
}

double Featurizer::hashed_unit(std::uint64_t table, std::uint64_t id, std::uint64_t dim) const {
  std::uint64_t h = splitmix64(cfg_.seed);
  h = splitmix64(h ^ table);
  h = splitmix64(h ^ id);
  h = splitmix64(h ^ dim);
  // 53 random bits -> [0, 1) -> [-1, 1)
  const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;
  return 2.0 * unit - 1.0;
}

std::vector<double> Featurizer::token_embed(TokenId token) const {
  std::vector<double> v(cfg_.d_v);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = hashed_unit(kTokenTable, token, i);
  return v;
}

std::vector<double> Featurizer::hash_embed(TokenId class_token,
                                           std::span<const TokenId> attributes) const {
  std::vector<double> v = token_embed(class_token);
  for (TokenId a : attributes) kernels::axpy(1.0, token_embed(a), v);
  return v;
}

std::size_t Featurizer::bbox_bin(const BBox& box) const {
  const auto cell = [&](double centre) {
    const auto g = static_cast<double>(cfg_.grid);
    return std::min(static_cast<std::size_t>(centre * g), cfg_.grid - 1);
  };
  return cell(box.y + 0.5 * box.h) * cfg_.grid + cell(box.x + 0.5 * box.w);
}

std::vector<double> Featurizer::bin_embed(std::size_t bin) const {
  std::vector<double> v(cfg_.d_v);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = hashed_unit(kBinTable, bin, i);
  return v;
}

std::vector<double> Featurizer::featurize_frame(const Frame& frame) const {
  std::vector<double> v(cfg_.d_v, 0.0);
  if (frame.blacked_out) return v;
  for (const SceneObject& o : frame.objects) {
    kernels::axpy(1.0, hash_embed(o.class_token, o.attribute_tokens), v);
    kernels::axpy(1.0, bbox_bin_embed(o.bbox), v);
  }
  return v;
}

VisualFeatures Featurizer::featurize_video(const SyntheticVideo& video) const {
  if (video.frames.empty()) throw InvalidInput("cannot featurize a video without frames");
  VisualFeatures f;
  f.pooled.assign(cfg_.d_v, 0.0);
  f.per_frame.reserve(video.frames.size());
  const double w = 1.0 / static_cast<double>(video.frames.size());
  for (const Frame& frame : video.frames) {
    f.per_frame.push_back(featurize_frame(frame));
    kernels::axpy(w, f.per_frame.back(), f.pooled);
  }
  return f;
}

// --- extraction -------------------------------------------------------------

SyntheticVideo extract_clip(const SyntheticVideo& video, const EventSegment& segment) {
  if (segment.start < 0 || segment.start > segment.end || segment.end >= video.num_frames()) {
    throw InvalidInput("clip [" + std::to_string(segment.start) + ", " +
                       std::to_string(segment.end) + "] outside video '" + video.video_id +
                       "' of " + std::to_string(video.num_frames()) + " frames");
  }
  SyntheticVideo clip;
  clip.video_id = video.video_id;
  clip.frames.assign(video.frames.begin() + segment.start, video.frames.begin() + segment.end + 1);
  for (const EventSegment& s : video.segments) {
    const int lo = std::max(s.start, segment.start);
    const int hi = std::min(s.end, segment.end);
    if (lo > hi) continue;
    clip.segments.push_back({lo - segment.start, hi - segment.start, s.event_token});
  }
  return clip;
}

SyntheticVideo extract_keyframe(const SyntheticVideo& video, int frame_index) {
  if (frame_index < 0 || frame_index >= video.num_frames()) {
    throw InvalidInput("keyframe " + std::to_string(frame_index) + " outside video '" +
                       video.video_id + "'");
  }
  return extract_clip(video, {frame_index, frame_index, 0});
}

// --- json -------------------------------------------------------------------

void to_json(nlohmann::json& j, const BBox& b) { j = nlohmann::json::array({b.x, b.y, b.w, b.h}); }

void from_json(const nlohmann::json& j, BBox& b) {
  if (!j.is_array() || j.size() != 4) throw InvalidInput("bbox must be [x, y, w, h]");
  b = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

void to_json(nlohmann::json& j, const SceneObject& o) {
  j = {{"object_id", o.object_id},
       {"class_token", o.class_token},
       {"attribute_tokens", o.attribute_tokens},
       {"bbox", o.bbox}};
}

void from_json(const nlohmann::json& j, SceneObject& o) {
  j.at("object_id").get_to(o.object_id);
  j.at("class_token").get_to(o.class_token);
  j.at("attribute_tokens").get_to(o.attribute_tokens);
  j.at("bbox").get_to(o.bbox);
}

void to_json(nlohmann::json& j, const Frame& f) {
  j = {{"index", f.index}, {"blacked_out", f.blacked_out}, {"objects", f.objects}};
}

void from_json(const nlohmann::json& j, Frame& f) {
  j.at("index").get_to(f.index);
  j.at("blacked_out").get_to(f.blacked_out);
  j.at("objects").get_to(f.objects);
}

void to_json(nlohmann::json& j, const EventSegment& s) {
  j = {{"start", s.start}, {"end", s.end}, {"event_token", s.event_token}};
}

void from_json(const nlohmann::json& j, EventSegment& s) {
  j.at("start").get_to(s.start);
  j.at("end").get_to(s.end);
  j.at("event_token").get_to(s.event_token);
}

void to_json(nlohmann::json& j, const SyntheticVideo& v) {
  j = {{"video_id", v.video_id}, {"frames", v.frames}, {"segments", v.segments}};
}

void from_json(const nlohmann::json& j, SyntheticVideo& v) {
  j.at("video_id").get_to(v.video_id);
  j.at("frames").get_to(v.frames);
  j.at("segments").get_to(v.segments);
}

}  // namespace hdpo
