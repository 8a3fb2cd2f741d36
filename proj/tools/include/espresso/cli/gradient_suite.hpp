#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace espresso::cli {

inline constexpr double kGradientTolerance = 1e-4;

struct GradientCase {
  std::string name;
  std::size_t entries = 0;
  double max_relative_error = 0.0;
  std::string worst;
  bool passed() const { return max_relative_error <= kGradientTolerance; }
};

/// Central-difference check of every differentiable op, attention, one
/// Q-Former, espresso_forward and the full needle pipeline (T=8, P=4,
/// D_v=D_llm=8, n=4). Weights are drawn wider than the training init so no
/// group sits near zero.
std::vector<GradientCase> run_gradient_suite(double h, std::uint64_t seed);

}  // namespace espresso::cli
