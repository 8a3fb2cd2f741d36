#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "espresso/tensor/tape.hpp"

namespace espresso {

struct AdamHyperparams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimState {
  AdamHyperparams hyper;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;
};

/// Zero moments shaped like `params`.
OptimState make_optim_state(std::span<Parameter* const> params, AdamHyperparams hyper = {});

/// One bias-corrected Adam update of every parameter; increments state.step.
/// Throws ShapeError if grads or moments do not match the parameters.
void adam_step(std::span<Parameter* const> params, std::span<const Tensor> grads,
               OptimState& state);

}  // namespace espresso
