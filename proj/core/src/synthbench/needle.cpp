#include "espresso/synthbench/needle.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "espresso/synthbench/prng.hpp"
#include "espresso/tensor/kernels.hpp"

namespace espresso {

NeedleComposite build_needle_composite(std::span<const Scene> scenes, std::uint64_t seed) {
  if (scenes.size() != kNeedleScenes) {
    throw std::invalid_argument("needle composite needs exactly 4 scenes, got " +
                                std::to_string(scenes.size()));
  }
  const Shape& shape = scenes.front().video.features().shape();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (scenes[i].video.features().shape() != shape) {
      throw ShapeError("needle scenes differ in shape: " + to_string(shape) + " vs " +
                       to_string(scenes[i].video.features().shape()));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (scenes[i].label == scenes[j].label) {
        throw std::invalid_argument("needle scenes must have distinct labels, label " +
                                    std::to_string(scenes[i].label) + " repeats");
      }
    }
  }

  Prng rng(seed);
  NeedleComposite composite;
  std::iota(composite.scene_order.begin(), composite.scene_order.end(), std::size_t{0});
  for (std::size_t i = kNeedleScenes - 1; i > 0; --i) {
    std::swap(composite.scene_order[i], composite.scene_order[rng.index_below(i + 1)]);
  }
  composite.target_scene = rng.index_below(kNeedleScenes);

  const std::size_t scene_frames = shape[0];
  std::vector<Tensor> parts;
  parts.reserve(kNeedleScenes);
  for (std::size_t k = 0; k < kNeedleScenes; ++k) {
    const Scene& source = scenes[composite.scene_order[k]];
    parts.push_back(source.video.features());
    composite.motif_labels[k] = source.label;
    composite.boundaries[k] = {k * scene_frames, (k + 1) * scene_frames};
  }
  composite.features = FeatureVideo(kernels::concat_axis(parts, 0));
  return composite;
}

std::string to_string(Split split) { return split == Split::train ? "train" : "eval"; }

std::array<double, kNeedleScenes> NeedleExample::target_onehot() const {
  std::array<double, kNeedleScenes> onehot{};
  onehot[composite.target_scene] = 1.0;
  return onehot;
}

NeedleExample make_needle_example(std::uint64_t seed, const NeedleTaskSpec& spec) {
  if (spec.classes < kNeedleScenes) {
    throw std::invalid_argument("M: needs at least 4 classes, got " +
                                std::to_string(spec.classes));
  }
  Prng rng(seed);
  // Partial Fisher-Yates over the class ids picks four distinct classes.
  std::vector<std::size_t> classes(spec.classes);
  std::iota(classes.begin(), classes.end(), std::size_t{0});
  for (std::size_t i = 0; i < kNeedleScenes; ++i) {
    std::swap(classes[i], classes[i + rng.index_below(spec.classes - i)]);
  }
  std::vector<Scene> scenes;
  scenes.reserve(kNeedleScenes);
  for (std::size_t i = 0; i < kNeedleScenes; ++i) {
    SceneSpec scene;
    scene.seed = rng.next();
    scene.frames = spec.frames_per_scene;
    scene.patches = spec.patches;
    scene.width = spec.width;
    scene.classes = spec.classes;
    scene.motif_class = classes[i];
    scene.amplitude = spec.amplitude;
    scene.noise_sigma = spec.noise_sigma;
    scenes.push_back(gen_scene(scene));
  }
  return NeedleExample{seed, build_needle_composite(scenes, rng.next())};
}

NeedleDataset make_needle_dataset(std::size_t count, std::uint64_t base_seed,
                                  const NeedleTaskSpec& spec, Split split) {
  if (spec.classes < kNeedleScenes) {
    throw std::invalid_argument("M: needs at least 4 classes, got " +
                                std::to_string(spec.classes));
  }
  NeedleDataset dataset;
  dataset.split = split;
  dataset.examples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    dataset.examples.push_back(make_needle_example(base_seed + i, spec));
  }
  return dataset;
}

namespace {

template <typename Range>
std::string join(const Range& values) {
  std::string out;
  for (auto v : values) {
    if (!out.empty()) out += ",";
    out += std::to_string(v);
  }
  return out;
}

}  // namespace

std::string manifest_line(std::size_t index, const NeedleExample& example) {
  const auto& c = example.composite;
  return "index=" + std::to_string(index) + " seed=" + std::to_string(example.seed) +
         " scene_order=" + join(c.scene_order) + " target_scene=" +
         std::to_string(c.target_scene) + " labels=" + join(c.motif_labels);
}

}  // namespace espresso
