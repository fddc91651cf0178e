#include "hdpo/world.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <sstream>

#include "hdpo/error.hpp"

namespace hdpo {

const WorldWords& world_words() {
  static const WorldWords w{
      {"person", "dog", "cat", "ball", "car", "cup", "bird", "horse", "box", "chair"},
      {"run", "walk", "jump", "hop", "sit", "stand", "throw", "catch", "swim", "dive"},
      {"red", "blue", "green", "yellow"},
      {"one", "two", "three"},
      {"left", "center", "right"},
      {"on", "under", "near"},
      {"fast", "slow"},
      {"stop", "exit"},
  };
  return w;
}

std::optional<std::string> near_synonym(const std::string& action) {
  static const std::map<std::string, std::string> pairs = {
      {"run", "walk"},   {"walk", "run"},   {"jump", "hop"},   {"hop", "jump"},
      {"sit", "stand"},  {"stand", "sit"},  {"throw", "catch"}, {"catch", "throw"},
      {"swim", "dive"},  {"dive", "swim"},
  };
  auto it = pairs.find(action);
  if (it == pairs.end()) return std::nullopt;
  return it->second;
}

int WorldConfig::total() const {
  int n = 0;
  for (const auto& [c, k] : counts) n += k;
  return n;
}

WorldConfig WorldConfig::parse_counts(const std::string& spec) {
  WorldConfig cfg;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidInput("count entry '" + item + "' is not Name=N");
    const auto name = item.substr(0, eq);
    const auto cat = parse_category(name);
    if (!cat) throw InvalidInput("unknown hallucination category '" + name + "'");
    int n = 0;
    try {
      n = std::stoi(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw InvalidInput("count for '" + name + "' is not an integer");
    }
    if (n < 0) throw InvalidInput("count for '" + name + "' is negative");
    cfg.counts[*cat] += n;
  }
  return cfg;
}

namespace {

constexpr std::size_t kSceneObjects = 6;

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  // Pick from `pool` avoiding everything in `exclude`.
  std::string pick(const std::vector<std::string>& pool, std::initializer_list<std::string> exclude = {}) {
    std::vector<std::string> options;
    for (const auto& w : pool) {
      if (std::find(exclude.begin(), exclude.end(), w) == exclude.end()) options.push_back(w);
    }
    return options[static_cast<std::size_t>(uniform(0, static_cast<int>(options.size()) - 1))];
  }

  BBox box() {
    const double w = real(0.12, 0.3), h = real(0.12, 0.3);
    return {real(0.0, 1.0 - w), real(0.0, 1.0 - h), w, h};
  }

 private:
  std::mt19937_64 rng_;
};

std::string column_word(const BBox& b) {
  const double cx = b.x + 0.5 * b.w;
  return world_words().columns[std::min<std::size_t>(static_cast<std::size_t>(cx * 3.0), 2)];
}

struct Texts {
  std::string question, chosen, relevant, irrelevant;
};

WorldSample generate_one(HallucinationCategory cat, std::size_t index, std::uint64_t seed,
                         const WorldConfig& cfg, const Lexicon& lex) {
  WorldWords W = world_words();
  // Objects past kSceneObjects never appear in a scene; irrelevant answers
  // draw from them so they name nothing any video shows.
  std::vector<std::string> unseen(W.objects.begin() + kSceneObjects, W.objects.end());
  W.objects.resize(kSceneObjects);
  if (cfg.palette > 0) {
    const auto cap = [&](std::vector<std::string>& pool) {
      pool.resize(std::min(pool.size(), static_cast<std::size_t>(std::max(cfg.palette, 2))));
    };
    cap(W.objects);
    cap(W.actions);
    cap(W.colors);
    cap(W.counts);
    cap(W.relations);
  }
  Draw d(seed);

  const int T = d.uniform(cfg.min_frames, cfg.max_frames);
  const int half = T / 2;
  const int len = d.uniform(2, half);
  const int s = d.uniform(0, half - len);
  const int e = s + len - 1;
  const int ds = T - 1 - e, de = T - 1 - s;

  const std::string A = d.pick(W.objects);
  const std::string B = d.pick(W.objects, {A});
  const std::string C = d.pick(unseen);
  const std::string D = d.pick(unseen, {C});
  const std::string a = d.pick(W.actions);
  const std::string b = d.pick(W.actions, {a});
  // With two actions the wrong one is the distractor's.
  const std::string a_wrong = W.actions.size() > 2 ? d.pick(W.actions, {a, b}) : b;
  const std::string colA = d.pick(W.colors);
  const std::string colA_wrong = d.pick(W.colors, {colA});
  const std::string colB = d.pick(W.colors);
  const std::string text = d.pick(W.texts);
  const std::string text_wrong = d.pick(W.texts, {text});
  const std::string rel = d.pick(W.relations);
  const std::string rel_wrong = d.pick(W.relations, {rel});
  const std::string speed = d.pick(W.speeds);
  const std::string speed_wrong = d.pick(W.speeds, {speed});
  const int copies =
      cat == HallucinationCategory::Number ? d.uniform(1, static_cast<int>(W.counts.size())) : 1;
  const std::string count = W.counts[static_cast<std::size_t>(copies - 1)];
  const std::string count_wrong = d.pick(W.counts, {count});

  const BBox actor_box = d.box();
  const BBox distractor_box = d.box();
  std::vector<BBox> copy_boxes;
  for (int i = 1; i < copies; ++i) copy_boxes.push_back(d.box());
  const std::string loc = column_word(actor_box);
  const std::string loc_wrong = d.pick(W.columns, {loc});

  const auto tok = [&](const std::string& w) { return lex.id(w); };

  SyntheticVideo video;
  char id[32];
  std::snprintf(id, sizeof id, "v%06zu", index);
  video.video_id = id;
  for (int f = 0; f < T; ++f) {
    Frame frame;
    frame.index = f;
    SceneObject actor{0, tok(A), {}, actor_box};
    using HC = HallucinationCategory;
    if (cat == HC::Color) actor.attribute_tokens.push_back(tok(colA));
    if (cat == HC::OCR) actor.attribute_tokens.push_back(tok(text));
    if (cat == HC::StaticRelation) actor.attribute_tokens.push_back(tok(rel));
    if (f >= s && f <= e) {
      actor.attribute_tokens.push_back(tok(a));
      if (cat == HC::DynamicAttribute) actor.attribute_tokens.push_back(tok(speed));
    }
    frame.objects.push_back(std::move(actor));
    for (int c = 1; c < copies; ++c) {
      frame.objects.push_back({c + 1, tok(A), {}, copy_boxes[static_cast<std::size_t>(c - 1)]});
    }
    if (f >= ds && f <= de) frame.objects.push_back({1, tok(B), {tok(b)}, distractor_box});
    video.frames.push_back(std::move(frame));
  }
  video.segments = {{s, e, tok(a)}, {ds, de, tok(b)}};

  Texts t;
  using HC = HallucinationCategory;
  switch (cat) {
    case HC::Object:
      t = {"what object does " + a, A, B, C};
      break;
    case HC::Number:
      t = {"how many " + A, count + " " + A, count_wrong + " " + A, count + " " + C};
      break;
    case HC::Location:
      t = {"where is the " + A, A + " " + loc, A + " " + loc_wrong, C + " " + loc};
      break;
    case HC::Color:
      t = {"what color is the " + A, colA + " " + A, colA_wrong + " " + A, colA + " " + C};
      break;
    case HC::StaticRelation:
      t = {"where is the " + A + " the " + B, A + " " + rel + " " + B, A + " " + rel_wrong + " " + B,
           C + " " + rel + " " + D};
      break;
    case HC::OCR:
      t = {"what text shows the " + A, text, text_wrong, C + " " + text};
      break;
    case HC::Action:
      t = {"what does the " + A + " do", A + " " + a, A + " " + a_wrong, C + " " + a};
      break;
    case HC::DynamicAttribute:
      t = {"how does the " + A + " " + a, a + " " + speed, a + " " + speed_wrong,
           C + " " + a + " " + speed};
      break;
    case HC::DynamicRelation:
      // Asked from either side so neither connective is always right.
      if (d.uniform(0, 1) == 0) {
        t = {"what does the " + A + " do before the " + B, A + " " + a + " before " + B + " " + b,
             A + " " + a + " after " + B + " " + b, C + " " + a + " before " + D + " " + b};
      } else {
        t = {"what does the " + B + " do after the " + A, B + " " + b + " after " + A + " " + a,
             B + " " + b + " before " + A + " " + a, D + " " + b + " after " + C + " " + a};
      }
      break;
    case HC::Sequence:
      t = {"what happens first", A + " " + a + " then " + B + " " + b,
           B + " " + b + " then " + A + " " + a, C + " " + a + " then " + D + " " + b};
      break;
  }

  AnnotationRecord rec;
  rec.video_id = video.video_id;
  rec.category = cat;
  rec.question = t.question;
  rec.chosen = t.chosen;
  rec.rejected_relevant = t.relevant;
  rec.rejected_irrelevant = t.irrelevant;
  rec.keyframes = {{(s + e) / 2, {{A, actor_box}}}};
  rec.segments = {{s, e, a}, {ds, de, b}};
  return {std::move(video), std::move(rec)};
}

}  // namespace

std::vector<WorldSample> generate_world(const WorldConfig& config, std::uint64_t seed,
                                        const Lexicon& lexicon) {
  if (config.min_frames < 6 || config.max_frames < config.min_frames) {
    throw ConfigError("world frame range must satisfy 6 <= min_frames <= max_frames");
  }
  std::vector<WorldSample> out;
  out.reserve(static_cast<std::size_t>(config.total()));
  // Round-robin over categories so neighbouring records (which share
  // randomness pools) mix categories.
  std::map<HallucinationCategory, int> left = config.counts;
  for (std::size_t index = 0; out.size() < static_cast<std::size_t>(config.total());) {
    for (auto cat : kAllCategories) {
      auto it = left.find(cat);
      if (it == left.end() || it->second <= 0) continue;
      --it->second;
      out.push_back(generate_one(cat, index, splitmix64(seed ^ index), config, lexicon));
      ++index;
    }
  }
  return out;
}

}  // namespace hdpo
