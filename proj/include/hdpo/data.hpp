#pragma once

// Corpus I/O, record validation, and assembly of training examples.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hdpo/lexicon.hpp"
#include "hdpo/negatives.hpp"
#include "hdpo/record.hpp"
#include "hdpo/video.hpp"
#include "hdpo/world.hpp"

namespace hdpo {

enum class ViolationKind {
  missing_rejected,
  relevant_not_distinct,
  bbox_out_of_range,
  segment_out_of_bounds,
  keyframe_out_of_range,
  keyframe_object_missing,
  irrelevant_mentions_video_object,
  video_mismatch,
};

std::string_view violation_name(ViolationKind kind) noexcept;

struct Violation {
  ViolationKind kind;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  std::size_t count(ViolationKind kind) const;
};

// Mechanical consistency checks between an annotation and its video. Never throws.
ValidationReport validate_record(const AnnotationRecord& rec, const SyntheticVideo& video,
                                 const Lexicon& lexicon = Lexicon::standard());

// One JSON object per line. Malformed lines raise ParseError with the 1-based
// line number; blank lines are skipped.
void write_jsonl(std::span<const AnnotationRecord> records, const std::string& path);
std::vector<AnnotationRecord> read_jsonl(const std::string& path);

void write_videos_jsonl(std::span<const SyntheticVideo> videos, const std::string& path);
std::vector<SyntheticVideo> read_videos_jsonl(const std::string& path);

// Sibling file holding the videos of a corpus: "c.jsonl" -> "c.videos.jsonl".
std::string videos_path_for(const std::string& corpus_path);

// Event = first segment, keyframe = first keyframe, key object = the object in
// that frame whose class matches the first keyframe label.
VisualAnchor anchor_from_annotation(const AnnotationRecord& rec, const SyntheticVideo& video,
                                    const Lexicon& lexicon);

PreferenceRecord assemble_training_example(const AnnotationRecord& rec,
                                           const SyntheticVideo& video, const Lexicon& lexicon,
                                           const StrategySet& strategies, std::uint64_t seed,
                                           const Featurizer& featurizer,
                                           const NegativePool& pool = {});

// Pairs annotations with videos by video_id and assembles every record.
// Randomness negatives draw from the record's chunk of `pool_size`
// consecutive records (a trailing chunk of one joins the previous chunk).
// Record i uses seed splitmix64(seed ^ i).
std::vector<PreferenceRecord> assemble_corpus(std::span<const AnnotationRecord> records,
                                              std::span<const SyntheticVideo> videos,
                                              const Lexicon& lexicon,
                                              const StrategySet& strategies, std::uint64_t seed,
                                              const Featurizer& featurizer,
                                              std::size_t pool_size = 8);

std::vector<PreferenceRecord> assemble_corpus(std::span<const WorldSample> samples,
                                              const Lexicon& lexicon,
                                              const StrategySet& strategies, std::uint64_t seed,
                                              const Featurizer& featurizer,
                                              std::size_t pool_size = 8);

// Human-readable description of the JSONL fields.
std::string schema_text();

}  // namespace hdpo
