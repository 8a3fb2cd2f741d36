#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "espresso/projectors/feature_video.hpp"
#include "espresso/synthbench/scenes.hpp"

namespace espresso {

inline constexpr std::size_t kNeedleScenes = 4;

/// Four scenes concatenated in shuffled order; one of the four slots is the
/// question target. `scene_order[k]` is the source index shown in slot k and
/// `motif_labels[k]` the class of that slot.
struct NeedleComposite {
  FeatureVideo features;
  std::array<std::size_t, kNeedleScenes> scene_order{};
  std::array<std::pair<std::size_t, std::size_t>, kNeedleScenes> boundaries{};
  std::size_t target_scene = 0;
  std::array<std::size_t, kNeedleScenes> motif_labels{};

  std::size_t label() const { return motif_labels[target_scene]; }
};

/// Fisher-Yates order first, then a uniform target, both from Prng(seed).
/// Throws std::invalid_argument unless there are exactly four scenes of equal
/// shape with pairwise distinct labels.
NeedleComposite build_needle_composite(std::span<const Scene> scenes, std::uint64_t seed);

struct NeedleTaskSpec {
  std::size_t frames_per_scene = 8;
  std::size_t patches = 16;
  std::size_t width = 16;
  std::size_t classes = 4;
  double amplitude = 2.0;
  double noise_sigma = 1.0;
};

enum class Split { train, eval };
std::string to_string(Split split);

struct NeedleExample {
  std::uint64_t seed = 0;
  NeedleComposite composite;

  std::size_t label() const { return composite.label(); }
  std::array<double, kNeedleScenes> target_onehot() const;
};

struct NeedleDataset {
  Split split = Split::train;
  std::vector<NeedleExample> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

/// Example i is a pure function of seed base_seed + i: four distinct motif
/// classes, four scenes, and the composite shuffle all come from that seed.
/// Throws std::invalid_argument when M < 4.
NeedleExample make_needle_example(std::uint64_t seed, const NeedleTaskSpec& spec);
NeedleDataset make_needle_dataset(std::size_t count, std::uint64_t base_seed,
                                  const NeedleTaskSpec& spec, Split split = Split::train);

/// One manifest record: index, seed, scene_order, target_scene, labels.
std::string manifest_line(std::size_t index, const NeedleExample& example);

}  // namespace espresso
