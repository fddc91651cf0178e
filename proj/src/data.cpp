#include "hdpo/data.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>

#include "hdpo/error.hpp"

namespace hdpo {

std::string_view violation_name(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::missing_rejected: return "missing_rejected";
    case ViolationKind::relevant_not_distinct: return "relevant_not_distinct";
    case ViolationKind::bbox_out_of_range: return "bbox_out_of_range";
    case ViolationKind::segment_out_of_bounds: return "segment_out_of_bounds";
    case ViolationKind::keyframe_out_of_range: return "keyframe_out_of_range";
    case ViolationKind::keyframe_object_missing: return "keyframe_object_missing";
    case ViolationKind::irrelevant_mentions_video_object: return "irrelevant_mentions_video_object";
    case ViolationKind::video_mismatch: return "video_mismatch";
  }
  return "?";
}

std::size_t ValidationReport::count(ViolationKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; }));
}

ValidationReport validate_record(const AnnotationRecord& rec, const SyntheticVideo& video,
                                 const Lexicon& lexicon) {
  ValidationReport report;
  const auto flag = [&](ViolationKind k, std::string detail) {
    report.violations.push_back({k, std::move(detail)});
  };
  const int T = video.num_frames();

  if (rec.video_id != video.video_id) {
    flag(ViolationKind::video_mismatch, "record video_id '" + rec.video_id + "' vs video '" +
                                            video.video_id + "'");
  }
  if (split_words(rec.rejected_relevant).empty()) {
    flag(ViolationKind::missing_rejected, "rejected_relevant is empty");
  }
  if (split_words(rec.rejected_irrelevant).empty()) {
    flag(ViolationKind::missing_rejected, "rejected_irrelevant is empty");
  }
  if (!split_words(rec.rejected_relevant).empty() &&
      split_words(rec.rejected_relevant) == split_words(rec.chosen)) {
    flag(ViolationKind::relevant_not_distinct, "rejected_relevant equals chosen");
  }

  for (const auto& kf : rec.keyframes) {
    const bool in_range = kf.frame_idx >= 0 && kf.frame_idx < T;
    if (!in_range) {
      flag(ViolationKind::keyframe_out_of_range,
           "keyframe " + std::to_string(kf.frame_idx) + " outside " + std::to_string(T) + " frames");
    }
    for (const auto& o : kf.objects) {
      if (!o.bbox.valid()) {
        flag(ViolationKind::bbox_out_of_range, "bbox of '" + o.label + "' in keyframe " +
                                                   std::to_string(kf.frame_idx));
      }
      if (!in_range) continue;
      const auto cls = lexicon.find(o.label);
      const auto& objs = video.frames[static_cast<std::size_t>(kf.frame_idx)].objects;
      const bool present = cls && std::any_of(objs.begin(), objs.end(), [&](const SceneObject& so) {
                             return so.class_token == *cls;
                           });
      if (!present) {
        flag(ViolationKind::keyframe_object_missing,
             "'" + o.label + "' not in frame " + std::to_string(kf.frame_idx));
      }
    }
  }

  for (const auto& s : rec.segments) {
    if (s.start < 0 || s.start > s.end || s.end >= T) {
      flag(ViolationKind::segment_out_of_bounds, "segment [" + std::to_string(s.start) + ", " +
                                                     std::to_string(s.end) + "] of '" + s.label + "'");
    }
  }

  std::set<TokenId> video_classes;
  for (const auto& f : video.frames) {
    for (const auto& o : f.objects) video_classes.insert(o.class_token);
  }
  for (const auto& w : split_words(rec.rejected_irrelevant)) {
    const auto t = lexicon.find(w);
    if (t && video_classes.count(*t)) {
      flag(ViolationKind::irrelevant_mentions_video_object,
           "rejected_irrelevant mentions in-video object '" + w + "'");
    }
  }
  return report;
}

// --- jsonl ------------------------------------------------------------------

namespace {

template <class F>
void for_each_line(const std::string& path, F&& f) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), n);
    }
    try {
      f(j);
    } catch (const InvalidInput& e) {
      throw ParseError(e.what(), n);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), n);
    }
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  return out;
}

}  // namespace

void write_jsonl(std::span<const AnnotationRecord> records, const std::string& path) {
  auto out = open_out(path);
  for (const auto& r : records) out << annotation_to_json(r).dump() << '\n';
}

std::vector<AnnotationRecord> read_jsonl(const std::string& path) {
  std::vector<AnnotationRecord> out;
  for_each_line(path, [&](const nlohmann::json& j) { out.push_back(annotation_from_json(j)); });
  return out;
}

void write_videos_jsonl(std::span<const SyntheticVideo> videos, const std::string& path) {
  auto out = open_out(path);
  for (const auto& v : videos) out << nlohmann::json(v).dump() << '\n';
}

std::vector<SyntheticVideo> read_videos_jsonl(const std::string& path) {
  std::vector<SyntheticVideo> out;
  for_each_line(path, [&](const nlohmann::json& j) { out.push_back(j.get<SyntheticVideo>()); });
  return out;
}

std::string videos_path_for(const std::string& corpus_path) {
  const std::string ext = ".jsonl";
  if (corpus_path.size() > ext.size() &&
      corpus_path.compare(corpus_path.size() - ext.size(), ext.size(), ext) == 0) {
    return corpus_path.substr(0, corpus_path.size() - ext.size()) + ".videos.jsonl";
  }
  return corpus_path + ".videos.jsonl";
}

// --- assembly ---------------------------------------------------------------

VisualAnchor anchor_from_annotation(const AnnotationRecord& rec, const SyntheticVideo& video,
                                    const Lexicon& lexicon) {
  if (rec.segments.empty()) throw InvalidInput("record '" + rec.video_id + "' has no event segment");
  if (rec.keyframes.empty() || rec.keyframes.front().objects.empty()) {
    throw InvalidInput("record '" + rec.video_id + "' has no annotated key object");
  }
  const auto& seg = rec.segments.front();
  const auto& kf = rec.keyframes.front();
  if (kf.frame_idx < 0 || kf.frame_idx >= video.num_frames()) {
    throw InvalidInput("record '" + rec.video_id + "' keyframe outside video");
  }
  const TokenId cls = lexicon.id(kf.objects.front().label);
  const auto& objs = video.frames[static_cast<std::size_t>(kf.frame_idx)].objects;
  const auto& box = kf.objects.front().bbox;
  auto it = std::find_if(objs.begin(), objs.end(),
                         [&](const SceneObject& o) { return o.class_token == cls && o.bbox == box; });
  if (it == objs.end()) {
    it = std::find_if(objs.begin(), objs.end(),
                      [&](const SceneObject& o) { return o.class_token == cls; });
  }
  if (it == objs.end()) {
    throw InvalidInput("record '" + rec.video_id + "' key object not found in keyframe");
  }
  return {video, {seg.start, seg.end, lexicon.id(seg.label)}, kf.frame_idx, it->object_id};
}

PreferenceRecord assemble_training_example(const AnnotationRecord& rec,
                                           const SyntheticVideo& video, const Lexicon& lexicon,
                                           const StrategySet& strategies, std::uint64_t seed,
                                           const Featurizer& featurizer, const NegativePool& pool) {
  VisualAnchor anchor = anchor_from_annotation(rec, video, lexicon);
  PreferenceTexts texts{rec.video_id,
                        rec.category,
                        lexicon.tokenize_prompt(rec.question),
                        lexicon.tokenize_response(rec.chosen),
                        lexicon.tokenize_response(rec.rejected_relevant),
                        lexicon.tokenize_response(rec.rejected_irrelevant)};
  return make_preference_record(anchor, std::move(texts), strategies, seed, featurizer, pool);
}

std::vector<PreferenceRecord> assemble_corpus(std::span<const AnnotationRecord> records,
                                              std::span<const SyntheticVideo> videos,
                                              const Lexicon& lexicon,
                                              const StrategySet& strategies, std::uint64_t seed,
                                              const Featurizer& featurizer,
                                              std::size_t pool_size) {
  if (pool_size == 0) throw ConfigError("pool size must be positive");
  std::unordered_map<std::string, const SyntheticVideo*> by_id;
  for (const auto& v : videos) by_id.emplace(v.video_id, &v);

  std::vector<VisualAnchor> anchors;
  anchors.reserve(records.size());
  for (const auto& r : records) {
    auto it = by_id.find(r.video_id);
    if (it == by_id.end()) throw InvalidInput("no video for record '" + r.video_id + "'");
    anchors.push_back(anchor_from_annotation(r, *it->second, lexicon));
  }

  const std::size_t n = records.size();
  std::vector<PreferenceRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = (i / pool_size) * pool_size;
    std::size_t hi = std::min(lo + pool_size, n);
    if (hi - lo == 1 && lo >= pool_size) lo -= pool_size;
    const NegativePool pool{std::span<const VisualAnchor>(anchors).subspan(lo, hi - lo), i - lo};
    const auto& r = records[i];
    PreferenceTexts texts{r.video_id,
                          r.category,
                          lexicon.tokenize_prompt(r.question),
                          lexicon.tokenize_response(r.chosen),
                          lexicon.tokenize_response(r.rejected_relevant),
                          lexicon.tokenize_response(r.rejected_irrelevant)};
    out.push_back(make_preference_record(anchors[i], std::move(texts), strategies,
                                         splitmix64(seed ^ i), featurizer, pool));
  }
  return out;
}

std::vector<PreferenceRecord> assemble_corpus(std::span<const WorldSample> samples,
                                              const Lexicon& lexicon,
                                              const StrategySet& strategies, std::uint64_t seed,
                                              const Featurizer& featurizer,
                                              std::size_t pool_size) {
  std::vector<AnnotationRecord> recs;
  std::vector<SyntheticVideo> vids;
  recs.reserve(samples.size());
  vids.reserve(samples.size());
  for (const auto& s : samples) {
    recs.push_back(s.annotation);
    vids.push_back(s.video);
  }
  return assemble_corpus(recs, vids, lexicon, strategies, seed, featurizer, pool_size);
}

std::string schema_text() {
  return R"(annotation record (one JSON object per line, UTF-8)
  video_id             string   id of the video in the sibling *.videos.jsonl file
  category             string   Object | Number | Location | Color | StaticRelation | OCR
                                (Perception) | Action | DynamicAttribute | DynamicRelation |
                                Sequence (Temporal)
  question             string   whitespace-tokenized prompt
  chosen               string   preferred answer
  rejected_relevant    string   plausible but wrong answer (differs from chosen)
  rejected_irrelevant  string   answer about content absent from the video
  keyframes            array    [{frame_idx: int, objects: [{label: string, bbox: [x, y, w, h]}]}]
                                first object of the first keyframe is the key object
  segments             array    [{start: int, end: int, label: string}], inclusive frame
                                positions; the first segment is the annotated event
bbox values are normalized: 0 <= x, y; w, h > 0; x + w <= 1; y + h <= 1

video (one JSON object per line)
  video_id   string
  frames     array  [{index: int, blacked_out: bool,
                      objects: [{object_id: int, class_token: int, attribute_tokens: [int],
                                 bbox: [x, y, w, h]}]}]
  segments   array  [{start: int, end: int, event_token: int}]
)";
}

}  // namespace hdpo
