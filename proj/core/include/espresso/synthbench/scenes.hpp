#pragma once

#include <cstddef>
#include <cstdint>

#include "espresso/projectors/feature_video.hpp"

namespace espresso {

struct SceneSpec {
  std::uint64_t seed = 0;
  std::size_t frames = 8;    // T_scene
  std::size_t patches = 16;  // P
  std::size_t width = 16;    // D_v
  std::size_t classes = 4;   // M
  std::size_t motif_class = 0;
  double amplitude = 2.0;    // a
  double noise_sigma = 1.0;  // σ
};

struct Scene {
  FeatureVideo video;
  std::size_t label = 0;
};

/// features = σ·N(0,1) + a·e_k on every (frame, patch), with noise drawn in
/// row-major order from Prng(seed). Throws std::invalid_argument for an
/// invalid spec (motif_class >= M, M > D_v, a <= 0, σ < 0, zero extents).
Scene gen_scene(const SceneSpec& spec);

}  // namespace espresso
