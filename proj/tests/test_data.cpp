#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "hdpo/data.hpp"
#include "hdpo/error.hpp"

using namespace hdpo;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() {
    std::remove(path.c_str());
    std::remove(videos_path_for(path).c_str());
  }
};

std::vector<WorldSample> small_world(std::uint64_t seed, int per_category) {
  WorldConfig cfg;
  for (auto c : kAllCategories) cfg.counts[c] = per_category;
  return generate_world(cfg, seed);
}

bool only(const ValidationReport& r, ViolationKind k) {
  return r.violations.size() == 1 && r.count(k) == 1;
}

}  // namespace

TEST_CASE("category taxonomy splits 6 perception and 4 temporal") {
  int perception = 0, temporal = 0;
  for (auto c : kAllCategories) {
    (dimension_of(c) == HallucinationDimension::Perception ? perception : temporal)++;
    CHECK(parse_category(category_name(c)) == c);
  }
  CHECK(perception == 6);
  CHECK(temporal == 4);
  CHECK(dimension_of(HallucinationCategory::OCR) == HallucinationDimension::Perception);
  CHECK(dimension_of(HallucinationCategory::Action) == HallucinationDimension::Temporal);
  CHECK_FALSE(parse_category("Smell").has_value());
}

TEST_CASE("JSONL round-trip is field-exact") {
  const auto world = small_world(5, 10);
  std::vector<AnnotationRecord> recs;
  std::vector<SyntheticVideo> vids;
  for (const auto& s : world) {
    recs.push_back(s.annotation);
    vids.push_back(s.video);
  }
  TempFile f("test_data_roundtrip.jsonl");
  write_jsonl(recs, f.path);
  write_videos_jsonl(vids, videos_path_for(f.path));
  CHECK(read_jsonl(f.path) == recs);
  CHECK(read_videos_jsonl(videos_path_for(f.path)) == vids);
  CHECK(videos_path_for("dir/c.jsonl") == "dir/c.videos.jsonl");
}

TEST_CASE("empty files read as empty corpora") {
  TempFile f("test_data_empty.jsonl");
  { std::ofstream(f.path) << "\n\n"; }
  CHECK(read_jsonl(f.path).empty());
}

TEST_CASE("a missing field is reported by name and line") {
  const auto rec = small_world(1, 1).front().annotation;
  auto j = annotation_to_json(rec);
  j.erase("rejected_irrelevant");
  TempFile f("test_data_missing.jsonl");
  {
    std::ofstream out(f.path);
    out << annotation_to_json(rec).dump() << "\n" << j.dump() << "\n";
  }
  try {
    read_jsonl(f.path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("rejected_irrelevant") != std::string::npos);
  }
}

TEST_CASE("malformed JSON reports its line") {
  TempFile f("test_data_bad.jsonl");
  { std::ofstream(f.path) << "{not json\n"; }
  CHECK_THROWS_AS(read_jsonl(f.path), ParseError);
  CHECK_THROWS_AS(read_jsonl("does/not/exist.jsonl"), InvalidInput);
}

TEST_CASE("generator output always validates") {
  for (const auto& s : small_world(9, 8)) {
    const auto r = validate_record(s.annotation, s.video);
    CHECK_MESSAGE(r.ok(), s.annotation.video_id << ": "
                                                << (r.ok() ? "" : r.violations.front().detail));
  }
}

TEST_CASE("each constructed violation class is reported once") {
  const auto s = small_world(3, 1).front();
  const auto& video = s.video;
  const Lexicon& lex = Lexicon::standard();
  REQUIRE(validate_record(s.annotation, video).ok());

  SUBCASE("missing rejected") {
    auto r = s.annotation;
    r.rejected_relevant.clear();
    CHECK(validate_record(r, video).count(ViolationKind::missing_rejected) == 1);
  }
  SUBCASE("relevant equal to chosen") {
    auto r = s.annotation;
    r.rejected_relevant = r.chosen;
    CHECK(only(validate_record(r, video), ViolationKind::relevant_not_distinct));
  }
  SUBCASE("bbox overflow") {
    auto r = s.annotation;
    r.keyframes[0].objects[0].bbox = {0.9, 0.1, 0.2, 0.2};
    CHECK(validate_record(r, video).count(ViolationKind::bbox_out_of_range) == 1);
  }
  SUBCASE("segment past the end") {
    auto r = s.annotation;
    r.segments[0].end = video.num_frames();
    CHECK(only(validate_record(r, video), ViolationKind::segment_out_of_bounds));
  }
  SUBCASE("keyframe past the end") {
    auto r = s.annotation;
    r.keyframes[0].frame_idx = video.num_frames() + 2;
    CHECK(validate_record(r, video).count(ViolationKind::keyframe_out_of_range) == 1);
  }
  SUBCASE("irrelevant answer names an object in the video") {
    auto r = s.annotation;
    const auto& cls = lex.word(video.frames[0].objects[0].class_token);
    r.rejected_irrelevant = cls;
    CHECK(only(validate_record(r, video), ViolationKind::irrelevant_mentions_video_object));
  }
  SUBCASE("annotation for another video") {
    auto r = s.annotation;
    r.video_id = "elsewhere";
    CHECK(only(validate_record(r, video), ViolationKind::video_mismatch));
  }
}

TEST_CASE("assembly is deterministic and pairs each record with its own video") {
  const auto world = small_world(4, 2);
  const Featurizer fz;
  const Lexicon& lex = Lexicon::standard();
  const auto a = assemble_corpus(world, lex, {}, 11, fz);
  const auto b = assemble_corpus(world, lex, {}, 11, fz);
  REQUIRE(a.size() == world.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].source_id == world[i].annotation.video_id);
    CHECK(a[i].video.rejected.features == b[i].video.rejected.features);
    CHECK(a[i].chosen == lex.tokenize_response(world[i].annotation.chosen));
    CHECK(a[i].chosen != a[i].rejected_relevant);
    const auto& seg = world[i].annotation.segments[0];
    const auto direct = fz.featurize_video(extract_clip(world[i].video, a[i].event)).pooled;
    CHECK(a[i].event.start == seg.start);
    CHECK(a[i].event.end == seg.end);
    CHECK(a[i].clip.chosen.features == direct);
  }
}

TEST_CASE("assembly fails on a missing video or unknown words without unk") {
  const auto world = small_world(2, 1);
  std::vector<AnnotationRecord> recs{world[0].annotation, world[1].annotation};
  std::vector<SyntheticVideo> vids{world[0].video};
  CHECK_THROWS_AS(assemble_corpus(recs, vids, Lexicon::standard(), {}, 0, Featurizer{}), InvalidInput);

  const Lexicon tiny({"<bos>", "<eos>", "what"});
  CHECK_THROWS_AS(tiny.tokenize_prompt("what now"), InvalidInput);
  const Lexicon with_unk({"<bos>", "<eos>", "<unk>", "what"});
  CHECK(with_unk.tokenize_prompt("what now").tokens == std::vector<TokenId>{3, 2});
}

TEST_CASE("tokenizer round-trips words and appends eos to responses") {
  const Lexicon& lex = Lexicon::standard();
  const auto y = lex.tokenize_response("dog run");
  CHECK(y.tokens.back() == lex.vocab().eos_id);
  CHECK(y.role == SeqRole::response);
  CHECK(lex.detokenize(TokenSeq::prompt({lex.id("dog"), lex.id("run")})) == "dog run");
}

TEST_CASE("schema text lists every field") {
  const auto text = schema_text();
  for (auto f : kAnnotationFields) CHECK(text.find(std::string(f)) != std::string::npos);
}
