#include "espresso/costmodel/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <stdexcept>

namespace espresso {

RuntimeReport measure_runtime(const std::function<void()>& fn, std::size_t warmups,
                              std::size_t runs) {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  using Clock = std::chrono::steady_clock;
  for (std::size_t i = 0; i < warmups; ++i) fn();

  RuntimeReport report;
  report.warmup_count = warmups;
  report.run_count = runs;
  report.samples_ms.reserve(runs);
  for (std::size_t i = 0; i < runs; ++i) {
    const auto start = Clock::now();
    fn();
    const auto stop = Clock::now();
    report.samples_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  const auto [lo, hi] = std::minmax_element(report.samples_ms.begin(), report.samples_ms.end());
  report.min_ms = *lo;
  report.max_ms = *hi;
  report.mean_ms = std::accumulate(report.samples_ms.begin(), report.samples_ms.end(), 0.0) /
                   static_cast<double>(runs);
  // Summation rounding can push the mean a hair outside [min, max].
  report.mean_ms = std::clamp(report.mean_ms, report.min_ms, report.max_ms);
  return report;
}

}  // namespace espresso
