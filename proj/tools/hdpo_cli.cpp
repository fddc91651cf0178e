// Command-line front end: data generation, training, evaluation, gradient
// checks, negative construction and the corpus schema.
//
// Exit codes: 0 success, 1 runtime failure or failed check, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "hdpo/data.hpp"
#include "hdpo/error.hpp"
#include "hdpo/eval.hpp"
#include "hdpo/gradcheck.hpp"
#include "hdpo/kernels.hpp"
#include "hdpo/negatives.hpp"
#include "hdpo/train.hpp"
#include "hdpo/world.hpp"

namespace {

using namespace hdpo;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelOptions {
  std::size_t d = PolicyParams::kDefaultDim;
  std::size_t d_v = PolicyParams::kDefaultVisualDim;
  double init_stddev = 0.1;
};

struct StrategyOptions {
  std::string video = "randomness";
  std::string clip = "relevant_segments";
  std::string object = "roi_mask";

  StrategySet resolve() const {
    const auto kind = [](const std::string& name, VisualLevel level) {
      const auto k = parse_kind(name);
      if (!k || !is_supported({level, *k})) {
        throw ConfigError("unsupported " + std::string(level_name(level)) + "-level strategy '" +
                          name + "'");
      }
      return *k;
    };
    return {kind(video, VisualLevel::video), kind(clip, VisualLevel::clip),
            kind(object, VisualLevel::object)};
  }
};

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--dim", m.d, "Embedding width d")->capture_default_str();
  cmd->add_option("--visual-dim", m.d_v, "Visual feature width d_v")->capture_default_str();
  cmd->add_option("--init-stddev", m.init_stddev, "Stddev of the Gaussian initialisation")
      ->capture_default_str();
}

void add_strategy_options(CLI::App* cmd, StrategyOptions& s) {
  cmd->add_option("--video-neg", s.video, "Video-level negative strategy")->capture_default_str();
  cmd->add_option("--clip-neg", s.clip, "Clip-level negative strategy")->capture_default_str();
  cmd->add_option("--object-neg", s.object, "Object-level negative strategy")
      ->capture_default_str();
}

Featurizer featurizer_for(const ModelOptions& m) {
  FeatureConfig fc;
  fc.d_v = m.d_v;
  return Featurizer(fc);
}

std::vector<PreferenceRecord> load_corpus(const std::string& path, const Lexicon& lexicon,
                                          const StrategySet& strategies, std::uint64_t seed,
                                          const Featurizer& featurizer) {
  const auto records = read_jsonl(path);
  const auto videos = read_videos_jsonl(videos_path_for(path));
  return assemble_corpus(records, videos, lexicon, strategies, seed, featurizer);
}

// Writes to `path`, or stdout for "-".
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  fn(out);
}

// ---- gen-data -------------------------------------------------------------

struct GenDataArgs {
  std::uint64_t seed = 0;
  std::string counts;
  std::string out;
  int palette = 0;
  int min_frames = 6;
  int max_frames = 10;
};

WorldConfig default_world_counts() {
  WorldConfig cfg;
  for (auto c : kAllCategories) cfg.counts[c] = 20;
  return cfg;
}

int run_gen_data(const GenDataArgs& a) {
  WorldConfig cfg = a.counts.empty() ? default_world_counts() : WorldConfig::parse_counts(a.counts);
  cfg.palette = a.palette;
  cfg.min_frames = a.min_frames;
  cfg.max_frames = a.max_frames;
  const Lexicon& lexicon = Lexicon::standard();
  const auto world = generate_world(cfg, a.seed, lexicon);

  std::vector<AnnotationRecord> records;
  std::vector<SyntheticVideo> videos;
  for (const auto& s : world) {
    const auto report = validate_record(s.annotation, s.video, lexicon);
    if (!report.ok()) {
      throw CheckFailed("generated record " + s.annotation.video_id + " failed validation: " +
                        report.violations.front().detail);
    }
    records.push_back(s.annotation);
    videos.push_back(s.video);
  }
  write_jsonl(records, a.out);
  write_videos_jsonl(videos, videos_path_for(a.out));
  std::cerr << "wrote " << records.size() << " records to " << a.out << " and "
            << videos_path_for(a.out) << "\n";
  return kExitOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  std::string out;
  std::string log = "-";
  std::uint64_t seed = 0;
  int epochs = TrainConfig{}.epochs;
  double lr = AdamConfig{}.learning_rate;
  bool large_model_lr = false;
  std::size_t batch_size = TrainConfig{}.batch_size;
  LossWeights weights;
  bool no_clip = false, no_object = false, no_token = false, no_irrelevant = false;
  std::string video_rejected = "relevant";
  ModelOptions model;
  StrategyOptions strategies;
};

TrainConfig train_config(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.seed = a.seed;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.adam.learning_rate = a.large_model_lr ? TrainConfig::kLargeModelLearningRate : a.lr;
  cfg.weights = a.weights;
  if (a.no_clip) cfg.weights.lambda_c = 0.0;
  if (a.no_object) cfg.weights.mu_o = 0.0;
  if (a.no_token) cfg.weights.rho_t = 0.0;
  if (a.no_irrelevant) cfg.weights.beta_ir = 0.0;
  if (a.video_rejected == "relevant") {
    cfg.rejected = RejectedChoice::relevant;
  } else if (a.video_rejected == "irrelevant") {
    cfg.rejected = RejectedChoice::irrelevant;
  } else {
    throw ConfigError("--video-rejected must be 'relevant' or 'irrelevant'");
  }
  cfg.validate();
  cfg.weights.validate();
  return cfg;
}

int run_train(const TrainArgs& a) {
  const TrainConfig cfg = train_config(a);
  const Lexicon& lexicon = Lexicon::standard();
  const Featurizer featurizer = featurizer_for(a.model);
  const auto corpus = load_corpus(a.corpus, lexicon, a.strategies.resolve(), a.seed, featurizer);
  const PolicyParams init =
      PolicyParams::gaussian(lexicon.vocab(), a.seed, a.model.d, a.model.d_v, a.model.init_stddev);

  std::optional<TrainResult> result;
  with_output(a.log, [&](std::ostream& log) {
    result = train_loop(corpus, cfg, init, [&](std::size_t step, const LossBreakdown& b) {
      log << breakdown_to_json(b, step).dump() << "\n";
    });
  });
  save_params(a.out, result->params);
  std::cerr << "trained " << result->log.size() << " steps; epoch margins:";
  for (double m : result->epoch_margins) std::cerr << " " << m;
  std::cerr << "\n";
  return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string corpus;
  std::string params;
  std::string out = "-";
  std::uint64_t seed = 0;
  std::optional<double> min_accuracy;
  ModelOptions model;
  StrategyOptions strategies;
};

int run_eval(EvalArgs a) {
  const Lexicon& lexicon = Lexicon::standard();
  const PolicyParams params = load_params(a.params);
  a.model.d_v = params.d_v();
  const Featurizer featurizer = featurizer_for(a.model);
  const auto corpus = load_corpus(a.corpus, lexicon, a.strategies.resolve(), a.seed, featurizer);
  const EvalReport report = evaluate(params, corpus, lexicon, featurizer);
  with_output(a.out, [&](std::ostream& out) { out << report_to_json(report).dump(2) << "\n"; });
  if (a.min_accuracy && report.preference.accuracy < *a.min_accuracy) {
    throw CheckFailed("preference accuracy " + std::to_string(report.preference.accuracy) +
                      " below --min-accuracy");
  }
  return kExitOk;
}

// ---- check-grad -----------------------------------------------------------

struct CheckGradArgs {
  std::uint64_t seed = 0;
  int instances = 1;
  double epsilon = oracle::FDConfig{}.epsilon;
  double tolerance = 1e-5;
  InstanceShape shape;
};

int run_check_grad(const CheckGradArgs& a) {
  std::array<std::array<double, ParamBlocks::kNumBlocks>, kAllLossTerms.size()> worst{};
  for (int i = 0; i < a.instances; ++i) {
    const GradInstance inst = random_grad_instance(a.seed + static_cast<std::uint64_t>(i), a.shape);
    for (std::size_t t = 0; t < kAllLossTerms.size(); ++t) {
      const auto cmp = check_term(inst, kAllLossTerms[t], {a.epsilon});
      for (std::size_t b = 0; b < ParamBlocks::kNumBlocks; ++b) {
        worst[t][b] = std::max(worst[t][b], cmp.max_rel_err[b]);
      }
    }
  }
  double overall = 0.0;
  std::printf("%-10s", "term");
  for (auto name : ParamBlocks::kBlockNames) std::printf(" %14.*s", static_cast<int>(name.size()), name.data());
  std::printf("\n");
  for (std::size_t t = 0; t < kAllLossTerms.size(); ++t) {
    const auto name = term_name(kAllLossTerms[t]);
    std::printf("%-10.*s", static_cast<int>(name.size()), name.data());
    for (double e : worst[t]) {
      std::printf(" %14.3e", e);
      overall = std::max(overall, e);
    }
    std::printf("\n");
  }
  std::printf("max relative error %.3e over %d instance(s), tolerance %.1e\n", overall,
              a.instances, a.tolerance);
  if (overall >= a.tolerance) throw CheckFailed("gradient check exceeded tolerance");
  return kExitOk;
}

// ---- negatives ------------------------------------------------------------

struct NegativesArgs {
  std::string corpus;
  std::size_t index = 0;
  std::string level;
  std::string kind;
  std::uint64_t seed = 0;
  std::string out = "-";
  ModelOptions model;
};

int run_negatives(const NegativesArgs& a) {
  const auto level = parse_level(a.level);
  const auto kind = parse_kind(a.kind);
  if (!level || !kind || !is_supported({*level, *kind})) {
    throw ConfigError("unsupported strategy '" + a.level + ":" + a.kind + "'");
  }
  const Lexicon& lexicon = Lexicon::standard();
  const Featurizer featurizer = featurizer_for(a.model);
  const auto records = read_jsonl(a.corpus);
  const auto videos = read_videos_jsonl(videos_path_for(a.corpus));
  if (a.index >= records.size()) throw InvalidInput("--index is past the end of the corpus");

  std::map<std::string, const SyntheticVideo*> by_id;
  for (const auto& v : videos) by_id[v.video_id] = &v;
  const auto find_video = [&](const AnnotationRecord& r) -> const SyntheticVideo& {
    auto it = by_id.find(r.video_id);
    if (it == by_id.end()) throw InvalidInput("no video for '" + r.video_id + "'");
    return *it->second;
  };
  // Same pool layout as corpus assembly: chunks of 8, a trailing single
  // record joins the previous chunk.
  constexpr std::size_t kPool = 8;
  std::size_t lo = a.index / kPool * kPool;
  std::size_t hi = std::min(lo + kPool, records.size());
  if (hi - lo == 1 && lo > 0) lo -= kPool;
  if (records.size() - hi == 1) hi = records.size();
  std::vector<VisualAnchor> anchors;
  for (std::size_t i = lo; i < hi; ++i) {
    anchors.push_back(anchor_from_annotation(records[i], find_video(records[i]), lexicon));
  }
  const NegativePool pool{anchors, a.index - lo};
  const VisualAnchor& anchor = anchors[a.index - lo];
  const SyntheticVideo negative =
      make_negative(anchor, {*level, *kind}, a.seed, featurizer, pool);

  nlohmann::ordered_json j;
  j["video_id"] = anchor.video.video_id;
  j["level"] = a.level;
  j["kind"] = a.kind;
  j["seed"] = a.seed;
  nlohmann::json video_json = negative;
  j["negative"] = std::move(video_json);
  const auto features = featurizer.featurize_video(negative).pooled;
  j["features"] = features;
  with_output(a.out, [&](std::ostream& out) { out << j.dump(2) << "\n"; });
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical preference optimisation over a toy video-language policy"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read options from a TOML/INI file");
  std::string isa;
  app.add_option("--isa", isa, "Force a kernel variant (scalar, avx2, neon)");

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic annotated corpus");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--counts", gen.counts,
                      "Records per category, e.g. Object=10,Action=5 (default 20 of each)");
  gen_cmd->add_option("--out", gen.out, "Annotation JSONL path; videos go to <stem>.videos.jsonl")
      ->required();
  gen_cmd->add_option("--palette", gen.palette, "Cap each word pool at this size (0 = full)")
      ->capture_default_str();
  gen_cmd->add_option("--min-frames", gen.min_frames)->capture_default_str();
  gen_cmd->add_option("--max-frames", gen.max_frames)->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a policy on a corpus");
  train_cmd->add_option("--corpus", tr.corpus, "Annotation JSONL")->required();
  train_cmd->add_option("--out", tr.out, "Where to write trained parameters")->required();
  train_cmd->add_option("--log", tr.log, "Per-step loss log (JSONL, '-' = stdout)")
      ->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "Seed for init, negatives and shuffling")
      ->capture_default_str();
  train_cmd->add_option("--epochs", tr.epochs)->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_flag("--large-model-lr", tr.large_model_lr, "Use the 5e-7 rate tuned for billion-parameter models instead of --lr");
  train_cmd->add_option("--batch-size", tr.batch_size)->capture_default_str();
  train_cmd->add_option("--beta", tr.weights.beta)->capture_default_str();
  train_cmd->add_option("--beta-re", tr.weights.beta_re)->capture_default_str();
  train_cmd->add_option("--beta-ir", tr.weights.beta_ir)->capture_default_str();
  train_cmd->add_option("--lambda", tr.weights.lambda_c, "Clip-level weight")
      ->capture_default_str();
  train_cmd->add_option("--mu", tr.weights.mu_o, "Object-level weight")->capture_default_str();
  train_cmd->add_option("--rho", tr.weights.rho_t, "Token-level weight")->capture_default_str();
  train_cmd->add_flag("--no-clip", tr.no_clip, "Ablation: lambda = 0");
  train_cmd->add_flag("--no-object", tr.no_object, "Ablation: mu = 0");
  train_cmd->add_flag("--no-token", tr.no_token, "Ablation: rho = 0");
  train_cmd->add_flag("--no-irrelevant", tr.no_irrelevant, "Ablation: beta_ir = 0");
  train_cmd->add_option("--video-rejected", tr.video_rejected,
                        "Rejected response for the video and token terms (relevant|irrelevant)")
      ->capture_default_str();
  add_model_options(train_cmd, tr.model);
  add_strategy_options(train_cmd, tr.strategies);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate parameters on a corpus");
  eval_cmd->add_option("--corpus", ev.corpus)->required();
  eval_cmd->add_option("--params", ev.params)->required();
  eval_cmd->add_option("--out", ev.out, "Report path ('-' = stdout)")->capture_default_str();
  eval_cmd->add_option("--seed", ev.seed, "Seed used to assemble negatives")
      ->capture_default_str();
  eval_cmd->add_option("--min-accuracy", ev.min_accuracy,
                       "Exit 1 if preference accuracy is below this");
  add_strategy_options(eval_cmd, ev.strategies);

  CheckGradArgs cg;
  auto* grad_cmd = app.add_subcommand("check-grad", "Compare analytic and numeric gradients");
  grad_cmd->add_option("--seed", cg.seed)->capture_default_str();
  grad_cmd->add_option("--instances", cg.instances)->capture_default_str();
  grad_cmd->add_option("--epsilon", cg.epsilon)->capture_default_str();
  grad_cmd->add_option("--tolerance", cg.tolerance)->capture_default_str();
  grad_cmd->add_option("--vocab", cg.shape.vocab)->capture_default_str();

  NegativesArgs ng;
  auto* neg_cmd = app.add_subcommand("negatives", "Apply one negative strategy and dump it");
  neg_cmd->add_option("--corpus", ng.corpus)->required();
  neg_cmd->add_option("--index", ng.index, "Record index")->capture_default_str();
  neg_cmd->add_option("--level", ng.level, "video | clip | object")->required();
  neg_cmd->add_option("--kind", ng.kind, "Strategy name, e.g. reverse")->required();
  neg_cmd->add_option("--seed", ng.seed)->capture_default_str();
  neg_cmd->add_option("--out", ng.out)->capture_default_str();
  add_model_options(neg_cmd, ng.model);

  bool print_schema = false;
  auto* schema_cmd = app.add_subcommand("schema", "Describe the corpus JSONL fields");
  schema_cmd->add_flag("--print", print_schema, "Print the field description");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!isa.empty()) {
      std::optional<kernels::Isa> chosen;
      for (auto candidate : {kernels::Isa::scalar, kernels::Isa::avx2, kernels::Isa::neon}) {
        if (kernels::isa_name(candidate) == isa) chosen = candidate;
      }
      if (!chosen) throw ConfigError("unknown --isa '" + isa + "'");
      kernels::set_active_isa(*chosen);
    }
    if (*gen_cmd) return run_gen_data(gen);
    if (*train_cmd) return run_train(tr);
    if (*eval_cmd) return run_eval(ev);
    if (*grad_cmd) return run_check_grad(cg);
    if (*neg_cmd) return run_negatives(ng);
    if (*schema_cmd) {
      if (!print_schema) {
        std::cerr << "schema: pass --print to dump the field description\n";
        return kExitUsage;
      }
      std::cout << schema_text();
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
