#include "espresso/synthbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace espresso {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("pearson: length mismatch (" + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw std::invalid_argument("pearson: needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

SweepAxis parse_sweep_axis(const std::string& text) {
  if (text == "spatial") return SweepAxis::spatial;
  if (text == "temporal") return SweepAxis::temporal;
  if (text == "segments") return SweepAxis::segments;
  throw std::invalid_argument("axis: unknown sweep axis '" + text + "'");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::spatial: return "spatial";
    case SweepAxis::temporal: return "temporal";
    case SweepAxis::segments: return "segments";
  }
  return "unknown";
}

double compression_rate(SweepAxis axis, double value) {
  if (axis == SweepAxis::segments) return value;
  if (!(value > 0.0)) throw std::invalid_argument("compression rate needs a positive query count");
  return -std::log(value);
}

SweepResult compression_sweep(SweepAxis axis, std::span<const double> values,
                              const std::function<double(double)>& evaluator) {
  if (values.size() < 2) throw std::invalid_argument("compression sweep needs at least two values");
  SweepResult result;
  result.axis = axis;
  for (double value : values) {
    double metric = 0.0;
    std::ostringstream config;
    config << to_string(axis) << "=" << value;
    try {
      metric = evaluator(value);
    } catch (const std::exception& e) {
      throw std::runtime_error("evaluator failed for " + config.str() + ": " + e.what());
    }
    if (!std::isfinite(metric)) {
      throw std::runtime_error("evaluator returned a non-finite metric for " + config.str());
    }
    result.rows.push_back({value, compression_rate(axis, value), metric});
  }
  std::vector<double> rates;
  std::vector<double> metrics;
  for (const auto& row : result.rows) {
    rates.push_back(row.rate);
    metrics.push_back(row.metric);
  }
  result.r = pearson(rates, metrics);
  return result;
}

}  // namespace espresso
