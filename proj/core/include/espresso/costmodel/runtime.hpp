#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace espresso {

struct RuntimeReport {
  std::size_t warmup_count = 0;
  std::size_t run_count = 0;
  std::vector<double> samples_ms;
  double mean_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
};

inline constexpr std::size_t kDefaultWarmups = 2;
inline constexpr std::size_t kDefaultRuns = 10;

/// Runs `fn` `warmups` times untimed, then `runs` times timed on a monotonic
/// clock, serially on the calling thread. Throws std::invalid_argument when
/// runs == 0.
RuntimeReport measure_runtime(const std::function<void()>& fn,
                              std::size_t warmups = kDefaultWarmups,
                              std::size_t runs = kDefaultRuns);

}  // namespace espresso
