#include "espresso/training/trainer.hpp"

#include <stdexcept>

#include "espresso/tensor/ops.hpp"
#include "espresso/training/loss.hpp"

namespace espresso {

std::vector<Parameter*> NeedleModel::parameters() {
  std::vector<Parameter*> out = projector.parameters();
  probe.collect(out);
  return out;
}

NeedleModel make_needle_model(const TrainConfig& cfg) {
  cfg.projector.validate();
  if (cfg.projector.feature_width != cfg.task.width) {
    throw ConfigError("dv", "projector width must equal the task feature width");
  }
  Projector projector = Projector::create(cfg.kind, cfg.projector);
  const std::size_t frames = kNeedleScenes * cfg.task.frames_per_scene;
  const std::size_t tokens = projector.output_length(frames, cfg.task.patches);
  Prng rng(cfg.seed);
  ProbeParams probe = make_probe(tokens, cfg.projector.llm_width, cfg.task.classes, rng);
  return NeedleModel{std::move(projector), std::move(probe)};
}

Var needle_logits(Tape& tape, NeedleModel& model, const NeedleExample& example) {
  RecordedOutput out = model.projector.forward(tape, example.composite.features);
  return probe_forward(out.tokens, example.target_onehot(), model.probe);
}

TrainReport train_needle(const TrainConfig& cfg, NeedleModel& model, const NeedleDataset& train,
                         const StepCallback& on_step) {
  if (train.empty()) throw std::invalid_argument("training dataset is empty");
  if (cfg.steps == 0) throw std::invalid_argument("steps: must be >= 1");
  if (cfg.batch == 0) throw std::invalid_argument("batch: must be >= 1");

  std::vector<Parameter*> params = model.parameters();
  OptimState state = make_optim_state(params, cfg.adam);
  Prng sampler(cfg.seed);

  TrainReport report;
  report.config = cfg;
  report.loss_history.reserve(cfg.steps);
  std::vector<Tensor> grads(params.size());
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Tape tape;
    std::vector<Var> losses;
    losses.reserve(cfg.batch);
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      const NeedleExample& example = train.examples[sampler.index_below(train.size())];
      losses.push_back(cross_entropy(needle_logits(tape, model, example), example.label()));
    }
    Var loss = scale(sum(concat_axis(losses, 0)), 1.0 / static_cast<double>(cfg.batch));
    tape.backward(loss);
    for (std::size_t i = 0; i < params.size(); ++i) grads[i] = tape.gradient(*params[i]);
    adam_step(params, grads, state);

    report.loss_history.push_back(loss.value()[0]);
    if (on_step) on_step(step, loss.value()[0]);
  }
  report.final_train_loss = report.loss_history.back();
  return report;
}

std::size_t argmax(const Tensor& logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

double evaluate_accuracy(NeedleModel& model, const NeedleDataset& dataset) {
  if (dataset.empty()) throw std::invalid_argument("evaluation dataset is empty");
  std::size_t correct = 0;
  for (const auto& example : dataset.examples) {
    Tape tape;
    if (argmax(needle_logits(tape, model, example).value()) == example.label()) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace espresso
