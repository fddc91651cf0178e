#include <doctest.h>

#include <random>

#include "hdpo/data.hpp"
#include "hdpo/error.hpp"
#include "hdpo/video.hpp"
#include "hdpo/world.hpp"

using namespace hdpo;

namespace {

SyntheticVideo random_video(std::uint64_t seed, int frames) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, 0.6);
  std::uniform_int_distribution<int> tok(2, 40);
  SyntheticVideo v;
  v.video_id = "r" + std::to_string(seed);
  for (int f = 0; f < frames; ++f) {
    Frame fr;
    fr.index = f;
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int o = 0; o < n; ++o) {
      SceneObject obj;
      obj.object_id = o;
      obj.class_token = static_cast<TokenId>(tok(rng));
      if (rng() % 2) obj.attribute_tokens.push_back(static_cast<TokenId>(tok(rng)));
      obj.bbox = {pos(rng), pos(rng), 0.2, 0.3};
      fr.objects.push_back(obj);
    }
    v.frames.push_back(fr);
  }
  v.segments.push_back({1, std::min(3, frames - 1), 5});
  return v;
}

std::vector<double> oracle_frame_feature(const Featurizer& fz, const Frame& f) {
  std::vector<double> acc(fz.config().d_v, 0.0);
  if (f.blacked_out) return acc;
  for (const auto& o : f.objects) {
    const auto h = fz.hash_embed(o.class_token, o.attribute_tokens);
    const auto b = fz.bbox_bin_embed(o.bbox);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += h[i] + b[i];
  }
  return acc;
}

std::vector<double> oracle_mean(const Featurizer& fz, const SyntheticVideo& v, int lo, int hi) {
  std::vector<double> acc(fz.config().d_v, 0.0);
  for (int f = lo; f <= hi; ++f) {
    const auto x = oracle_frame_feature(fz, v.frames[static_cast<std::size_t>(f)]);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
  }
  for (auto& a : acc) a /= (hi - lo + 1);
  return acc;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol);
}

}  // namespace

TEST_CASE("blacked-out and empty frames featurize to zero") {
  const Featurizer fz;
  Frame empty;
  CHECK(fz.featurize_frame(empty) == std::vector<double>(fz.config().d_v, 0.0));
  Frame black = random_video(1, 1).frames[0];
  black.blacked_out = true;
  CHECK(fz.featurize_frame(black) == std::vector<double>(fz.config().d_v, 0.0));
}

TEST_CASE("frame featurization is deterministic and matches the additive definition") {
  const Featurizer fz;
  const auto v = random_video(3, 4);
  for (const auto& f : v.frames) {
    CHECK(fz.featurize_frame(f) == fz.featurize_frame(f));
    check_close(fz.featurize_frame(f), oracle_frame_feature(fz, f), 1e-12);
  }
}

TEST_CASE("pooled features are the mean of per-frame features") {
  const Featurizer fz;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto v = random_video(seed, 2 + static_cast<int>(seed % 7));
    check_close(fz.featurize_video(v).pooled, oracle_mean(fz, v, 0, v.num_frames() - 1), 1e-12);
  }
  SyntheticVideo same;
  const auto f = random_video(9, 1).frames[0];
  for (int i = 0; i < 4; ++i) same.frames.push_back(f);
  check_close(fz.featurize_video(same).pooled, fz.featurize_frame(f), 1e-15);
}

TEST_CASE("bbox bins split the unit square into a grid") {
  const Featurizer fz;
  CHECK(fz.num_bins() == 9);
  CHECK(fz.bbox_bin({0.0, 0.0, 0.1, 0.1}) == 0);
  CHECK(fz.bbox_bin({0.8, 0.8, 0.1, 0.1}) == 8);
  CHECK(fz.bbox_bin({0.4, 0.0, 0.2, 0.2}) != fz.bbox_bin({0.0, 0.0, 0.2, 0.2}));
}

TEST_CASE("extract_clip keeps frames in order with their source indices") {
  const Featurizer fz;
  const auto v = random_video(4, 6);
  const auto whole = extract_clip(v, {0, 5, 0});
  CHECK(whole.frames == v.frames);
  const auto one = extract_clip(v, {2, 2, 0});
  REQUIRE(one.num_frames() == 1);
  CHECK(one.frames[0].index == 2);
  const auto mid = extract_clip(v, {1, 3, 0});
  REQUIRE(mid.num_frames() == 3);
  check_close(fz.featurize_video(mid).pooled, oracle_mean(fz, v, 1, 3), 1e-12);
  CHECK_THROWS_AS(extract_clip(v, {3, 6, 0}), InvalidInput);
  CHECK_THROWS_AS(extract_clip(v, {3, 2, 0}), InvalidInput);
}

TEST_CASE("extract_keyframe yields a single-frame video") {
  const Featurizer fz;
  const auto v = random_video(5, 5);
  const auto k = extract_keyframe(v, 3);
  REQUIRE(k.num_frames() == 1);
  CHECK(k.frames[0].index == 3);
  check_close(fz.featurize_video(k).pooled, oracle_mean(fz, v, 3, 3), 1e-12);
  CHECK_THROWS_AS(extract_keyframe(v, 5), InvalidInput);
  CHECK_THROWS_AS(extract_keyframe(v, -1), InvalidInput);
}

TEST_CASE("video JSON round-trips") {
  const auto v = random_video(6, 4);
  nlohmann::json j = v;
  CHECK(j.get<SyntheticVideo>() == v);
}

TEST_CASE("world generation: empty, deterministic, and validator-clean") {
  WorldConfig empty;
  CHECK(generate_world(empty, 1).empty());

  const auto cfg = WorldConfig::parse_counts("Object=10,Action=10");
  CHECK(cfg.total() == 20);
  const auto a = generate_world(cfg, 7);
  const auto b = generate_world(cfg, 7);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].video == b[i].video);
    CHECK(a[i].annotation == b[i].annotation);
    const auto report = validate_record(a[i].annotation, a[i].video);
    CHECK_MESSAGE(report.ok(), a[i].annotation.video_id);
  }
  std::size_t objects = 0;
  for (const auto& s : a) objects += s.annotation.category == HallucinationCategory::Object;
  CHECK(objects == 10);
}

TEST_CASE("every category generates valid records") {
  WorldConfig cfg;
  for (auto c : kAllCategories) cfg.counts[c] = 5;
  const auto world = generate_world(cfg, 11);
  CHECK(world.size() == 50);
  for (const auto& s : world) {
    CAPTURE(s.annotation.video_id);
    CHECK(validate_record(s.annotation, s.video).ok());
    CHECK(s.annotation.chosen != s.annotation.rejected_relevant);
  }
}

TEST_CASE("count specs reject unknown categories") {
  CHECK_THROWS(WorldConfig::parse_counts("Bogus=3"));
}
