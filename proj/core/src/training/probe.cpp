#include "espresso/training/probe.hpp"

#include "espresso/attention/attention.hpp"
#include "espresso/tensor/ops.hpp"

namespace espresso {

ProbeParams make_probe(std::size_t output_tokens, std::size_t llm_width, std::size_t classes,
                       Prng& rng) {
  const std::size_t inputs = kNeedleScenes * output_tokens * llm_width + kNeedleScenes;
  return ProbeParams{normal_parameter("probe.w", {inputs, classes}, rng),
                     normal_parameter("probe.b", {classes}, rng)};
}

Var probe_forward(Var tokens, const TargetOnehot& target, ProbeParams& probe) {
  Tape& tape = tokens.tape();
  const std::size_t features = tokens.value().size();
  if (features != probe.token_features()) {
    throw ShapeError("probe expects " + std::to_string(probe.token_features()) +
                     " token features, got " + to_string(tokens.shape()));
  }
  Var flat = reshape(tokens, {1, features});
  std::vector<Var> parts;
  parts.reserve(kNeedleScenes + 1);
  for (double slot : target) parts.push_back(scale(flat, slot));
  parts.push_back(tape.constant(Tensor({1, kNeedleScenes}, {target.begin(), target.end()})));
  Var logits = linear(concat_axis(parts, 1), tape.parameter(probe.weight),
                      tape.parameter(probe.bias));
  return reshape(logits, {probe.classes()});
}

}  // namespace espresso
