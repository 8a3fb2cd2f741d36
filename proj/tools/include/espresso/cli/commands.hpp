#pragma once

#include <iosfwd>
#include <optional>

#include "espresso/cli/report.hpp"
#include "espresso/cli/run_config.hpp"

namespace espresso::cli {

Report gradcheck_report(const RunConfig& cfg);
Report scaling_table(const RunConfig& cfg);
Report bench_table(const RunConfig& cfg);
Report stats_report(const RunConfig& cfg);
Report eval_report(const RunConfig& cfg);

/// Writes `count` examples as <out>/example_NNNNN.espr plus <out>/manifest.txt.
void write_needle_dataset(const RunConfig& cfg);

struct TrainOutcome {
  Report history;  // step, loss
  Report summary;  // one row
};
TrainOutcome train_command(const RunConfig& cfg, std::ostream& log);

/// Runs the configured command. Reports go to cfg.out (atomically) or to
/// `out`; progress and summaries go to `log`. Returns the exit status.
int dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& log);

/// Parses argv, dispatches, and turns every error into a diagnostic on `err`
/// and a nonzero status (2 for usage and config errors, 1 otherwise).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace espresso::cli
