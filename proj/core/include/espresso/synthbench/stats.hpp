#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace espresso {

/// Sample Pearson correlation of mean-centred x and y. Throws
/// std::invalid_argument on length mismatch, fewer than two points, or a
/// zero-variance argument.
double pearson(std::span<const double> x, std::span<const double> y);

enum class SweepAxis { spatial, temporal, segments };

SweepAxis parse_sweep_axis(const std::string& text);
std::string to_string(SweepAxis axis);

/// -log(value) for the spatial and temporal axes; the raw count for segments.
double compression_rate(SweepAxis axis, double value);

struct SweepRow {
  double value = 0.0;
  double rate = 0.0;
  double metric = 0.0;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::spatial;
  std::vector<SweepRow> rows;
  double r = 0.0;  // pearson(rate, metric)
};

/// Evaluates `evaluator` once per configuration value, in order. Evaluator
/// failures and non-finite metrics are rethrown as std::runtime_error naming
/// the configuration.
SweepResult compression_sweep(SweepAxis axis, std::span<const double> values,
                              const std::function<double(double)>& evaluator);

}  // namespace espresso
