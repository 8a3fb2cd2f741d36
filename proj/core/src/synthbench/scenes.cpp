#include "espresso/synthbench/scenes.hpp"

#include <stdexcept>
#include <string>

#include "espresso/synthbench/prng.hpp"

namespace espresso {

Scene gen_scene(const SceneSpec& spec) {
  if (spec.frames == 0 || spec.patches == 0 || spec.width == 0) {
    throw std::invalid_argument("scene extents must be positive");
  }
  if (spec.classes > spec.width) {
    throw std::invalid_argument("M: class count " + std::to_string(spec.classes) +
                                " exceeds feature width " + std::to_string(spec.width));
  }
  if (spec.motif_class >= spec.classes || spec.motif_class >= spec.width) {
    throw std::invalid_argument("motif class " + std::to_string(spec.motif_class) +
                                " out of range for M=" + std::to_string(spec.classes));
  }
  if (!(spec.amplitude > 0.0)) throw std::invalid_argument("a: motif amplitude must be > 0");
  if (!(spec.noise_sigma >= 0.0)) throw std::invalid_argument("sigma: noise must be >= 0");

  Prng rng(spec.seed);
  Tensor features({spec.frames, spec.patches, spec.width});
  auto values = features.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = spec.noise_sigma * rng.normal();
    if (i % spec.width == spec.motif_class) values[i] += spec.amplitude;
  }
  return Scene{FeatureVideo(std::move(features)), spec.motif_class};
}

}  // namespace espresso
