#include "espresso/cli/run_config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <sstream>

namespace espresso::cli {

namespace {

bool is_command(const std::string& name) {
  const auto& names = command_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

template <typename T>
T parse_keyed(const std::string& key, const std::string& text, T (*parse)(const std::string&)) {
  try {
    return parse(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
}

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

struct RawOptions {
  std::string kind = "espresso";
  std::string pe = "sinusoidal";
  std::string format = "csv";
  std::string axis;
  std::size_t n = 1;
};

void build_app(CLI::App& app, RunConfig& cfg, RawOptions& raw, CLI::Option*& n_option) {
  auto& p = cfg.projector;
  app.set_help_flag("--help", "print this option list");
  app.set_config("--config", "", "key = value file; flags override it");
  app.allow_config_extras(false);

  app.add_option("--kind", raw.kind, "espresso | mlp | pr | meanpool (| all for scaling, bench)");
  app.add_option("--dv", p.feature_width, "feature width D_v");
  app.add_option("--dllm", p.llm_width, "LLM embedding width D_llm");
  app.add_option("--p", p.spatial_queries, "spatial queries");
  app.add_option("--t", p.temporal_queries, "temporal queries");
  n_option = app.add_option("--n", raw.n, "segments (default 1; 4 for train and eval)");
  app.add_option("--L", p.resampler_queries, "PR baseline queries");
  app.add_option("--heads", p.heads);
  app.add_option("--blocks", p.blocks);
  app.add_option("--ffn_mult", p.ffn_mult);
  app.add_option("--pe", raw.pe, "sinusoidal | disabled");
  app.add_option("--init_seed", p.seed, "projector initialisation seed");

  app.add_option("--frames", cfg.frames, "frame counts T")->delimiter(',');
  app.add_option("--patches", cfg.patches, "patches per frame P");
  app.add_option("--scene_frames", cfg.task.frames_per_scene, "frames per needle scene");
  app.add_option("--classes", cfg.task.classes, "motif classes M");
  app.add_option("--amplitude", cfg.task.amplitude, "motif amplitude a");
  app.add_option("--sigma", cfg.task.noise_sigma, "noise standard deviation");

  app.add_option("--steps", cfg.steps);
  app.add_option("--batch", cfg.batch);
  app.add_option("--lr", cfg.learning_rate);
  app.add_option("--train_count", cfg.train_count);
  app.add_option("--eval_count", cfg.eval_count);
  app.add_option("--train_seed", cfg.train_seed, "base seed of the training split");
  app.add_option("--eval_seed", cfg.eval_seed, "base seed of the evaluation split");
  app.add_option("--seed", cfg.seed, "training seed (probe init and batch sampling)");

  app.add_option("--count", cfg.count, "needle-gen example count");
  app.add_option("--h", cfg.h, "finite-difference step");
  app.add_option("--warmups", cfg.warmups);
  app.add_option("--runs", cfg.runs);
  app.add_option("--axis", raw.axis, "spatial | temporal | segments");
  app.add_option("--table", cfg.table, "stats input csv with value,metric columns");
  app.add_option("--checkpoint", cfg.checkpoint);

  app.add_option("--out", cfg.out, "report path (needle-gen: output directory)");
  app.add_option("--summary", cfg.summary, "train summary report path");
  app.add_option("--format", raw.format, "csv | structured");
}

void validate(RunConfig& cfg) {
  const std::string& command = cfg.command;
  const bool needle = command == "train" || command == "eval" || command == "needle-gen";

  if (cfg.kind != "all") parse_keyed("kind", cfg.kind, parse_projector_kind);
  require(cfg.kind != "all" || command == "scaling" || command == "bench", "kind",
          "'all' is only accepted by scaling and bench");
  cfg.projector.validate();

  require(!cfg.frames.empty(), "frames", "must list at least one frame count");
  for (auto f : cfg.frames) require(f >= 1, "frames", "must be >= 1");
  require(cfg.patches >= 1, "patches", "must be >= 1");
  if (command == "scaling" || command == "bench") {
    const auto kinds = cfg.kinds();
    if (std::find(kinds.begin(), kinds.end(), ProjectorKind::espresso) != kinds.end()) {
      for (auto f : cfg.frames) {
        require(f >= cfg.projector.segments, "n",
                "n=" + std::to_string(cfg.projector.segments) + " exceeds T=" +
                    std::to_string(f));
      }
    }
  }

  cfg.task.width = cfg.projector.feature_width;
  cfg.task.patches = cfg.patches;
  require(cfg.task.frames_per_scene >= 1, "scene_frames", "must be >= 1");
  require(cfg.task.classes >= kNeedleScenes, "classes", "must be >= 4");
  require(cfg.task.classes <= cfg.task.width, "classes", "must not exceed dv");
  require(cfg.task.amplitude > 0.0, "amplitude", "must be > 0");
  require(cfg.task.noise_sigma >= 0.0, "sigma", "must be >= 0");
  if (needle && command != "needle-gen") {
    require(cfg.projector.segments <= kNeedleScenes * cfg.task.frames_per_scene, "n",
            "n=" + std::to_string(cfg.projector.segments) + " exceeds the composite length " +
                std::to_string(kNeedleScenes * cfg.task.frames_per_scene));
  }

  require(cfg.steps >= 1, "steps", "must be >= 1");
  require(cfg.batch >= 1, "batch", "must be >= 1");
  require(cfg.learning_rate > 0.0, "lr", "must be > 0");
  if (command == "train") require(cfg.train_count >= 1, "train_count", "must be >= 1");
  if (command == "eval") require(cfg.eval_count >= 1, "eval_count", "must be >= 1");
  if (command == "needle-gen") require(cfg.count >= 1, "count", "must be >= 1");
  require(cfg.h >= 1e-6 && cfg.h <= 1e-4, "h", "must lie in [1e-6, 1e-4]");
  require(cfg.runs >= 1, "runs", "must be >= 1");

  if (command == "eval") require(!cfg.checkpoint.empty(), "checkpoint", "eval needs a checkpoint");
  if (command == "stats") require(!cfg.table.empty(), "table", "stats needs an input table");
  if (command == "needle-gen") require(!cfg.out.empty(), "out", "needle-gen needs a directory");
}

}  // namespace

std::vector<ProjectorKind> RunConfig::kinds() const {
  if (kind == "all") {
    return {ProjectorKind::espresso, ProjectorKind::mlp, ProjectorKind::pr,
            ProjectorKind::meanpool};
  }
  return {parse_projector_kind(kind)};
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.kind = parse_projector_kind(kind);
  t.projector = projector;
  t.task = task;
  t.steps = steps;
  t.batch = batch;
  t.seed = seed;
  t.adam.learning_rate = learning_rate;
  return t;
}

RunConfig parse_config(int argc, const char* const* argv) {
  if (argc < 2) throw UsageError("missing command");
  RunConfig cfg;
  cfg.command = argv[1];
  if (cfg.command == "--help" || cfg.command == "-h") throw HelpRequested(usage());
  if (!is_command(cfg.command)) throw UsageError("unknown command '" + cfg.command + "'");

  CLI::App app{"espresso " + cfg.command};
  RawOptions raw;
  CLI::Option* n_option = nullptr;
  build_app(app, cfg, raw, n_option);

  // CLI11 consumes arguments from the back of the vector.
  std::vector<std::string> args(argv + 2, argv + argc);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  cfg.kind = raw.kind;
  cfg.projector.pe = parse_keyed("pe", raw.pe, parse_pe_mode);
  cfg.format = parse_keyed("format", raw.format, parse_report_format);
  if (!raw.axis.empty()) cfg.axis = parse_keyed("axis", raw.axis, parse_sweep_axis);
  const bool needle_model = cfg.command == "train" || cfg.command == "eval";
  cfg.projector.segments = n_option->count() > 0 ? raw.n : (needle_model ? kNeedleScenes : 1);
  validate(cfg);
  return cfg;
}

std::string usage() {
  std::ostringstream out;
  out << "usage: espresso <command> [--key value ...] [--config FILE]\n\ncommands:\n"
      << "  gradcheck   finite-difference check of every differentiable op and the full pipeline\n"
      << "  scaling     token, parameter and MAC counts over a frame sweep\n"
      << "  bench       wall-clock forward timing (2 warm-up + 10 timed runs)\n"
      << "  needle-gen  write a needle dataset (.espr features + manifest) to --out\n"
      << "  train       train projector + probe on the needle task\n"
      << "  eval        accuracy of a checkpoint on the evaluation split\n"
      << "  stats       pearson / compression sweep over --table\n\n"
      << "Run `espresso <command> --help` for the full option list.\n";
  return out.str();
}

}  // namespace espresso::cli
