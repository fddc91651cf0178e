#pragma once

// Generator for the synthetic preference corpus.
//
// Each video has an actor (object 0) visible in every frame, optional copies
// of the actor's class, and a distractor object that only appears during its
// own segment. The actor performs the annotated event in the first half of the
// video; the distractor acts in the mirrored window of the second half, so
// reversing the video swaps which window holds which event.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdpo/lexicon.hpp"
#include "hdpo/record.hpp"
#include "hdpo/video.hpp"

namespace hdpo {

struct WorldConfig {
  std::map<HallucinationCategory, int> counts;
  int min_frames = 6;
  int max_frames = 10;
  int palette = 0;  // >0 caps every word pool at this many entries

  int total() const;
  // Parses "Object=10,Action=5".
  static WorldConfig parse_counts(const std::string& spec);
};

struct WorldSample {
  SyntheticVideo video;
  AnnotationRecord annotation;
};

// Records cycle through the categories in taxonomy order until each count is
// used up; record i draws from mt19937_64(splitmix64(seed ^ i)).
std::vector<WorldSample> generate_world(const WorldConfig& config, std::uint64_t seed,
                                        const Lexicon& lexicon = Lexicon::standard());

// Word groups of the standard lexicon used by the generator and the probes.
struct WorldWords {
  std::vector<std::string> objects, actions, colors, counts, columns, relations, speeds, texts;
};
const WorldWords& world_words();

// run<->walk, jump<->hop, sit<->stand, throw<->catch, swim<->dive
std::optional<std::string> near_synonym(const std::string& action);

}  // namespace hdpo
