#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "espresso/tensor/tape.hpp"

namespace espresso {

/// Builds a single-element loss on the given tape from registered parameters.
using ScalarFunction = std::function<Var(Tape&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t entries_checked = 0;
};

/// Compares the tape's analytic gradient with central differences
/// (f(θ+h) - f(θ-h)) / 2h for every entry of every parameter. The error of an
/// entry is |analytic - numeric| / max(1, |numeric|).
///
/// Requires h in [1e-6, 1e-4]; throws std::domain_error if f is non-finite at
/// any probe point. Parameters are restored bit-exactly before returning.
GradCheckResult finite_diff_grad_check(const ScalarFunction& f,
                                       std::span<Parameter* const> params, double h = 1e-5);

}  // namespace espresso
