#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "espresso/projectors/projectors.hpp"
#include "espresso/synthbench/needle.hpp"
#include "espresso/training/adam.hpp"
#include "espresso/training/probe.hpp"

namespace espresso {

/// Default projector of the needle task: one segment per scene.
inline EspressoConfig needle_projector_config() {
  EspressoConfig cfg;
  cfg.segments = kNeedleScenes;
  return cfg;
}

struct TrainConfig {
  ProjectorKind kind = ProjectorKind::espresso;
  EspressoConfig projector = needle_projector_config();
  NeedleTaskSpec task;
  std::size_t steps = 2000;
  std::size_t batch = 32;
  std::uint64_t seed = 7;
  AdamHyperparams adam;
};

struct TrainReport {
  TrainConfig config;
  std::vector<double> loss_history;
  double final_train_loss = 0.0;
  std::optional<double> eval_accuracy;
};

/// Projector plus probe, the full trainable system of the needle task.
struct NeedleModel {
  Projector projector;
  ProbeParams probe;

  std::vector<Parameter*> parameters();
};

/// Fresh model: projector from cfg.projector (its own seed), probe from
/// Prng(cfg.seed) sized for a composite of 4 * frames_per_scene frames.
NeedleModel make_needle_model(const TrainConfig& cfg);

/// logits [M] for one example, recorded on `tape`.
Var needle_logits(Tape& tape, NeedleModel& model, const NeedleExample& example);

/// Called after every step with (step index, mean batch loss).
using StepCallback = std::function<void(std::size_t, double)>;

/// Minibatch Adam on mean cross-entropy. Batch indices are drawn with
/// replacement from Prng(cfg.seed). Throws std::invalid_argument for an
/// empty dataset, steps == 0 or batch == 0.
TrainReport train_needle(const TrainConfig& cfg, NeedleModel& model, const NeedleDataset& train,
                         const StepCallback& on_step = {});

/// argmax(logits) == label rate; ties resolve to the lowest class index.
/// Throws std::invalid_argument for an empty dataset.
double evaluate_accuracy(NeedleModel& model, const NeedleDataset& dataset);

/// Index of the largest entry, lowest index on ties.
std::size_t argmax(const Tensor& logits);

}  // namespace espresso
