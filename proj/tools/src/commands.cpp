#include "espresso/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "espresso/cli/gradient_suite.hpp"
#include "espresso/costmodel/cost_model.hpp"
#include "espresso/projectors/feature_video.hpp"
#include "espresso/training/checkpoint.hpp"

namespace espresso::cli {

namespace {

using I = std::int64_t;

I as_int(std::uint64_t v) { return static_cast<I>(v); }

std::vector<ProjectorDescriptor> descriptors(const RunConfig& cfg) {
  std::vector<ProjectorDescriptor> out;
  for (ProjectorKind kind : cfg.kinds()) out.push_back({kind, cfg.projector});
  return out;
}

double mean_of(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  if (begin >= end) return std::nan("");
  return std::accumulate(v.begin() + begin, v.begin() + end, 0.0) /
         static_cast<double>(end - begin);
}

void emit(const Report& report, const RunConfig& cfg, std::ostream& out) {
  if (cfg.out.empty()) {
    write_report(report, cfg.format, out);
  } else {
    write_report(report, cfg.format, cfg.out);
  }
}

}  // namespace

Report gradcheck_report(const RunConfig& cfg) {
  Report report({"check", "entries", "max_rel_error", "worst", "passed"});
  for (const auto& c : run_gradient_suite(cfg.h, cfg.seed)) {
    report.add_row({c.name, as_int(c.entries), c.max_relative_error, c.worst,
                    I{c.passed() ? 1 : 0}});
  }
  return report;
}

Report scaling_table(const RunConfig& cfg) {
  Report report({"kind", "frames", "patches", "tokens", "params", "macs"});
  const auto kinds = descriptors(cfg);
  for (const CostRow& row : scaling_report(kinds, cfg.frames, cfg.patches)) {
    report.add_row({to_string(row.kind), as_int(row.frames), as_int(row.patches),
                    as_int(row.llm_input_tokens), as_int(row.projector_params),
                    as_int(row.projector_macs)});
  }
  return report;
}

Report bench_table(const RunConfig& cfg) {
  Report report({"kind", "frames", "patches", "tokens", "warmups", "runs", "mean_ms", "min_ms",
                 "max_ms"});
  const auto kinds = descriptors(cfg);
  ScalingOptions options;
  options.measure = true;
  options.warmups = cfg.warmups;
  options.runs = cfg.runs;
  for (const CostRow& row : scaling_report(kinds, cfg.frames, cfg.patches, options)) {
    const RuntimeReport& rt = *row.runtime;
    report.add_row({to_string(row.kind), as_int(row.frames), as_int(row.patches),
                    as_int(row.llm_input_tokens), as_int(rt.warmup_count), as_int(rt.run_count),
                    rt.mean_ms, rt.min_ms, rt.max_ms});
  }
  return report;
}

Report stats_report(const RunConfig& cfg) {
  const Report table = read_report(cfg.table, ReportFormat::csv);
  const std::size_t value_col = table.column("value");
  const std::size_t metric_col = table.column("metric");
  auto number = [&](const Cell& cell) {
    if (const auto* i = std::get_if<std::int64_t>(&cell)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&cell)) return *d;
    throw std::runtime_error(cfg.table.string() + ": non-numeric cell '" + std::get<std::string>(cell) + "'");
  };
  std::vector<double> values;
  std::vector<double> metrics;
  for (const auto& row : table.rows) {
    values.push_back(number(row[value_col]));
    metrics.push_back(number(row[metric_col]));
  }

  Report report({"axis", "points", "r"});
  if (cfg.axis) {
    std::map<double, double> lookup;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!lookup.emplace(values[i], metrics[i]).second) {
        throw std::runtime_error(cfg.table.string() + ": duplicate value " + format_cell(values[i]));
      }
    }
    const SweepResult sweep =
        compression_sweep(*cfg.axis, values, [&](double v) { return lookup.at(v); });
    report.add_row({to_string(*cfg.axis), as_int(values.size()), sweep.r});
  } else {
    report.add_row({std::string("raw"), as_int(values.size()), pearson(values, metrics)});
  }
  return report;
}

Report eval_report(const RunConfig& cfg) {
  const TrainConfig tc = cfg.train_config();
  NeedleModel model = make_needle_model(tc);
  load_checkpoint(cfg.checkpoint, model.parameters());
  const NeedleDataset data = make_needle_dataset(cfg.eval_count, cfg.eval_seed, tc.task, Split::eval);
  Report report({"kind", "eval_count", "eval_seed", "accuracy"});
  report.add_row({cfg.kind, as_int(cfg.eval_count), as_int(cfg.eval_seed),
                  evaluate_accuracy(model, data)});
  return report;
}

void write_needle_dataset(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  std::ostringstream manifest;
  for (std::size_t i = 0; i < cfg.count; ++i) {
    const NeedleExample example = make_needle_example(cfg.train_seed + i, cfg.task);
    char name[32];
    std::snprintf(name, sizeof name, "example_%05zu.espr", i);
    std::ostringstream bytes;
    write_feature_video(bytes, example.composite.features);
    write_file_atomic(cfg.out / name, bytes.str());
    manifest << manifest_line(i, example) << '\n';
  }
  write_file_atomic(cfg.out / "manifest.txt", manifest.str());
}

TrainOutcome train_command(const RunConfig& cfg, std::ostream& log) {
  const TrainConfig tc = cfg.train_config();
  const NeedleDataset train = make_needle_dataset(cfg.train_count, cfg.train_seed, tc.task);
  NeedleModel model = make_needle_model(tc);
  const TrainReport result = train_needle(tc, model, train, [&](std::size_t step, double loss) {
    if (step % 100 == 0 || step + 1 == tc.steps) log << "step " << step << " loss " << loss << '\n';
  });

  double accuracy = std::nan("");
  if (cfg.eval_count > 0) {
    const NeedleDataset eval = make_needle_dataset(cfg.eval_count, cfg.eval_seed, tc.task, Split::eval);
    accuracy = evaluate_accuracy(model, eval);
  }
  if (!cfg.checkpoint.empty()) save_checkpoint(cfg.checkpoint, model.parameters());

  TrainOutcome outcome{Report({"step", "loss"}),
                       Report({"kind", "steps", "batch", "seed", "final_train_loss",
                               "first100_mean", "last100_mean", "eval_accuracy"})};
  const auto& h = result.loss_history;
  for (std::size_t i = 0; i < h.size(); ++i) outcome.history.add_row({as_int(i), h[i]});
  const std::size_t window = std::min<std::size_t>(100, h.size());
  outcome.summary.add_row({cfg.kind, as_int(cfg.steps), as_int(cfg.batch), as_int(cfg.seed),
                           result.final_train_loss, mean_of(h, 0, window),
                           mean_of(h, h.size() - window, h.size()), accuracy});
  return outcome;
}

int dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const std::string& c = cfg.command;
  if (c == "gradcheck") {
    const Report report = gradcheck_report(cfg);
    emit(report, cfg, out);
    const std::size_t passed_col = report.column("passed");
    for (const auto& row : report.rows) {
      if (std::get<std::int64_t>(row[passed_col]) == 0) {
        log << "gradcheck: " << std::get<std::string>(row[0]) << " exceeds tolerance "
            << kGradientTolerance << '\n';
        return 1;
      }
    }
    return 0;
  }
  if (c == "scaling") {
    emit(scaling_table(cfg), cfg, out);
  } else if (c == "bench") {
    emit(bench_table(cfg), cfg, out);
  } else if (c == "stats") {
    emit(stats_report(cfg), cfg, out);
  } else if (c == "eval") {
    emit(eval_report(cfg), cfg, out);
  } else if (c == "needle-gen") {
    write_needle_dataset(cfg);
    log << "wrote " << cfg.count << " examples to " << cfg.out.string() << '\n';
  } else if (c == "train") {
    const TrainOutcome outcome = train_command(cfg, log);
    emit(outcome.history, cfg, out);
    if (!cfg.summary.empty()) write_report(outcome.summary, cfg.format, cfg.summary);
    write_report(outcome.summary, ReportFormat::structured, log);
  } else {
    throw UsageError("unknown command '" + c + "'");
  }
  return 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_config(argc, argv);
  } catch (const HelpRequested& help) {
    out << help.what();
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << usage();
    return 2;
  } catch (const ConfigError& e) {
    err << "error: invalid config: " << e.what() << '\n';
    return 2;
  }
  try {
    return dispatch(cfg, out, err);
  } catch (const std::exception& e) {
    err << "error: " << cfg.command << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace espresso::cli
