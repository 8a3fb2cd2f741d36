#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "espresso/synthbench/needle.hpp"
#include "espresso/synthbench/prng.hpp"
#include "espresso/tensor/tape.hpp"

namespace espresso {

/// Question-conditioned linear readout standing in for the language model.
///
/// The probe sees z = [onehot ⊗ flatten(tokens); onehot] and returns
/// z W + b, i.e. one linear map of the tokens per target slot.
struct ProbeParams {
  Parameter weight;  // [(4 * L_out * D_llm + 4) x M]
  Parameter bias;    // [M]

  std::size_t classes() const { return bias.value.size(); }
  std::size_t token_features() const {
    return (weight.value.dim(0) - kNeedleScenes) / kNeedleScenes;
  }
  void collect(std::vector<Parameter*>& out) { out.insert(out.end(), {&weight, &bias}); }
};

ProbeParams make_probe(std::size_t output_tokens, std::size_t llm_width, std::size_t classes,
                       Prng& rng);

using TargetOnehot = std::array<double, kNeedleScenes>;

/// tokens: [L_out x D_llm] -> logits [M].
Var probe_forward(Var tokens, const TargetOnehot& target, ProbeParams& probe);

}  // namespace espresso
