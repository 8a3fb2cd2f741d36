#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "espresso/cli/report.hpp"
#include "espresso/projectors/config.hpp"
#include "espresso/synthbench/needle.hpp"
#include "espresso/synthbench/stats.hpp"
#include "espresso/training/trainer.hpp"

namespace espresso::cli {

/// Bad command line: unknown command, unknown flag or config key, or a value
/// that does not parse.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `--help` was given; what() holds the option listing.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"gradcheck", "scaling", "bench", "needle-gen",
                                              "train",     "eval",    "stats"};
  return names;
}

struct RunConfig {
  std::string command;

  // Projector. `kind` may also be "all" for scaling and bench.
  std::string kind = "espresso";
  EspressoConfig projector;

  // Inputs.
  std::vector<std::size_t> frames{8, 16, 32, 64, 128};
  std::size_t patches = 16;
  NeedleTaskSpec task;

  // Training and evaluation.
  std::size_t steps = 2000;
  std::size_t batch = 32;
  double learning_rate = 1e-3;
  std::size_t train_count = 4096;
  std::size_t eval_count = 512;
  std::uint64_t train_seed = 0;
  std::uint64_t eval_seed = 1'000'000;
  std::uint64_t seed = 7;

  // Command specific.
  std::size_t count = 16;  // needle-gen examples
  double h = 1e-5;         // gradcheck step
  std::size_t warmups = 2;
  std::size_t runs = 10;
  std::optional<SweepAxis> axis;
  std::filesystem::path table;
  std::filesystem::path checkpoint;

  std::filesystem::path out;      // empty: report goes to stdout
  std::filesystem::path summary;  // train only
  ReportFormat format = ReportFormat::csv;

  std::vector<ProjectorKind> kinds() const;
  TrainConfig train_config() const;
};

/// argv[1] is the command; the rest are `--key value` flags. `--config FILE`
/// reads `key = value` lines (`#` comments); flags override file values.
/// Every field is validated before returning. Throws UsageError or
/// ConfigError (naming the key).
RunConfig parse_config(int argc, const char* const* argv);

std::string usage();

}  // namespace espresso::cli
