#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "hdpo/data.hpp"
#include "hdpo/error.hpp"
#include "hdpo/negatives.hpp"
#include "hdpo/world.hpp"

using namespace hdpo;

namespace {

SyntheticVideo numbered_video(int frames) {
  SyntheticVideo v;
  v.video_id = "n" + std::to_string(frames);
  for (int f = 0; f < frames; ++f) {
    Frame fr;
    fr.index = f;
    fr.objects.push_back({0, static_cast<TokenId>(2 + f), {}, {0.1, 0.1, 0.2, 0.2}});
    fr.objects.push_back({1, 9, {10}, {0.7, 0.7, 0.2, 0.2}});
    v.frames.push_back(fr);
  }
  v.segments.push_back({1, std::min(3, frames - 1), 30});
  return v;
}

SyntheticVideo keyframe_of(const SyntheticVideo& v) { return extract_keyframe(v, 0); }

std::vector<int> blacked(const SyntheticVideo& v) {
  std::vector<int> out;
  for (const auto& f : v.frames) {
    if (f.blacked_out) out.push_back(f.index);
  }
  return out;
}

}  // namespace

TEST_CASE("exactly 13 level/kind pairs are supported") {
  CHECK(supported_strategies().size() == 13);
  CHECK(is_supported({VisualLevel::video, NegativeKind::reverse}));
  CHECK(is_supported({VisualLevel::clip, NegativeKind::relevant_segments}));
  CHECK(is_supported({VisualLevel::object, NegativeKind::roi_move}));
  CHECK_FALSE(is_supported({VisualLevel::video, NegativeKind::roi_mask}));
  CHECK_FALSE(is_supported({VisualLevel::object, NegativeKind::reverse}));
  for (const auto& s : supported_strategies()) {
    CHECK(parse_kind(kind_name(s.kind)) == s.kind);
    CHECK(parse_level(level_name(s.level)) == s.level);
  }
}

TEST_CASE("reverse remaps segments and is an involution") {
  const auto v = numbered_video(6);
  const auto r = reverse_frames(v);
  CHECK(r.segments[0].start == 2);
  CHECK(r.segments[0].end == 4);
  CHECK(r.frames.front() == v.frames.back());
  CHECK(reverse_frames(r) == v);
  CHECK_THROWS_AS(reverse_frames(numbered_video(1)), InvalidInput);
}

TEST_CASE("palindromic videos featurize identically after reversal") {
  const Featurizer fz;
  auto v = numbered_video(5);
  v.frames[3].objects = v.frames[1].objects;
  v.frames[4].objects = v.frames[0].objects;
  CHECK(fz.featurize_video(reverse_frames(v)).pooled == fz.featurize_video(v).pooled);
}

TEST_CASE("blackout zeroes features, keeps objects, and is idempotent") {
  const Featurizer fz;
  const auto v = numbered_video(4);
  const auto b = blackout(v);
  CHECK(fz.featurize_video(b).pooled == std::vector<double>(fz.config().d_v, 0.0));
  CHECK(blackout(b) == b);
  for (std::size_t i = 0; i < v.frames.size(); ++i) {
    CHECK(b.frames[i].objects == v.frames[i].objects);
  }
}

TEST_CASE("random frame mask blacks out ceil(T/2) frames by a replayable draw") {
  CHECK(blacked(random_frame_mask(numbered_video(2), 5)).size() == 1);
  CHECK(random_frame_mask(numbered_video(6), 5) == random_frame_mask(numbered_video(6), 5));

  // Replay the documented partial Fisher-Yates.
  const int T = 7;
  const std::uint64_t seed = 1234;
  std::vector<int> order(T);
  for (int i = 0; i < T; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < 4; ++i) {
    const auto j = static_cast<int>(i + rng() % static_cast<std::uint64_t>(T - i));
    std::swap(order[i], order[j]);
  }
  const std::vector<int> expected(order.begin(), order.begin() + 4);
  CHECK(random_mask_positions(T, seed) == expected);
  std::vector<int> sorted = expected;
  std::sort(sorted.begin(), sorted.end());
  CHECK(blacked(random_frame_mask(numbered_video(T), seed)) == sorted);
}

TEST_CASE("batch negatives never return the anchor") {
  CHECK(sample_batch_index(2, 0, 99) == 1);
  CHECK(sample_batch_index(2, 1, 99) == 0);
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const std::size_t n = 2 + s % 9;
    const std::size_t self = s % n;
    CHECK(sample_batch_index(n, self, s) != self);
    CHECK(sample_batch_index(n, self, s) == sample_batch_index(n, self, s));
  }
  std::vector<SyntheticVideo> one{numbered_video(3)};
  CHECK_THROWS_AS(sample_batch_negative(one, 0, 1), InvalidInput);
}

TEST_CASE("relevant complement drops exactly the event frames") {
  const auto v = numbered_video(6);
  const auto c = relevant_complement_segments(v, {1, 3, 0});
  std::vector<int> idx;
  for (const auto& f : c.frames) idx.push_back(f.index);
  CHECK(idx == std::vector<int>{0, 4, 5});
  const auto last = relevant_complement_segments(v, {0, 4, 0});
  REQUIRE(last.num_frames() == 1);
  CHECK(last.frames[0].index == 5);
  CHECK_THROWS_AS(relevant_complement_segments(v, {0, 5, 0}), InvalidInput);
}

TEST_CASE("roi_mask removes exactly one object and subtracts its feature") {
  const Featurizer fz;
  const auto key = keyframe_of(numbered_video(3));
  const auto masked = roi_mask(key, 0);
  REQUIRE(masked.frames[0].objects.size() == 1);
  CHECK(masked.frames[0].objects[0] == key.frames[0].objects[1]);
  const auto& gone = key.frames[0].objects[0];
  const auto before = fz.featurize_video(key).pooled;
  const auto after = fz.featurize_video(masked).pooled;
  const auto h = fz.hash_embed(gone.class_token, gone.attribute_tokens);
  const auto b = fz.bbox_bin_embed(gone.bbox);
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(after[i] - before[i] == doctest::Approx(-h[i] - b[i]).epsilon(1e-12));
  }
  const auto empty = roi_mask(masked, 1);
  CHECK(empty.frames[0].objects.empty());
  CHECK(fz.featurize_video(empty).pooled == std::vector<double>(fz.config().d_v, 0.0));
  CHECK_THROWS_AS(roi_mask(key, 7), InvalidInput);
}

TEST_CASE("roi_move changes the bin and only the bin feature") {
  const Featurizer fz;
  const auto key = keyframe_of(numbered_video(3));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto moved = roi_move(key, 0, seed, fz);
    const auto& o0 = key.frames[0].objects[0];
    const auto& o1 = *moved.frames[0].find(0);
    CHECK(o1.bbox.valid());
    CHECK(o1.bbox.w == o0.bbox.w);
    CHECK(o1.bbox.h == o0.bbox.h);
    CHECK(fz.bbox_bin(o1.bbox) != fz.bbox_bin(o0.bbox));
    const auto before = fz.featurize_video(key).pooled;
    const auto after = fz.featurize_video(moved).pooled;
    const auto nb = fz.bbox_bin_embed(o1.bbox);
    const auto ob = fz.bbox_bin_embed(o0.bbox);
    for (std::size_t i = 0; i < before.size(); ++i) {
      CHECK(after[i] - before[i] == doctest::Approx(nb[i] - ob[i]).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(roi_move(key, 5, 0, fz), InvalidInput);
  FeatureConfig one_bin;
  one_bin.grid = 1;
  CHECK_THROWS_AS(roi_move(key, 0, 0, Featurizer(one_bin)), ConstraintError);
}

TEST_CASE("preference records: deterministic, default strategies validate, degenerate flagged") {
  const Featurizer fz;
  const Lexicon& lex = Lexicon::standard();
  const auto world = generate_world(WorldConfig::parse_counts("Action=4,Object=4"), 3);
  std::vector<VisualAnchor> anchors;
  for (const auto& s : world) anchors.push_back(anchor_from_annotation(s.annotation, s.video, lex));

  const auto a = assemble_training_example(world[0].annotation, world[0].video, lex, {}, 5, fz,
                                           {anchors, 0});
  const auto b = assemble_training_example(world[0].annotation, world[0].video, lex, {}, 5, fz,
                                           {anchors, 0});
  CHECK(a.video.rejected.video == b.video.rejected.video);
  CHECK(a.object.rejected.features == b.object.rejected.features);
  CHECK(a.warnings.empty());
  CHECK(validate_record(world[0].annotation, world[0].video, lex).ok());
  CHECK(a.chosen != a.rejected_relevant);
  CHECK(a.video.rejected.video.video_id != a.video.chosen.video.video_id);

  StrategySet rev;
  rev.video = NegativeKind::reverse;
  const auto r = assemble_training_example(world[0].annotation, world[0].video, lex, rev, 5, fz);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("video") != std::string::npos);
}

TEST_CASE("unsupported strategies are rejected") {
  const Featurizer fz;
  VisualAnchor anchor{numbered_video(4), {1, 2, 30}, 0, 0};
  CHECK_THROWS_AS(make_negative(anchor, {VisualLevel::video, NegativeKind::roi_mask}, 0, fz),
                  InvalidInput);
}
