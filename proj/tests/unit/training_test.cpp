#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "espresso/tensor/gradcheck.hpp"
#include "espresso/tensor/ops.hpp"
#include "espresso/training/adam.hpp"
#include "espresso/training/checkpoint.hpp"
#include "espresso/training/loss.hpp"
#include "espresso/training/probe.hpp"
#include "espresso/training/trainer.hpp"
#include "support/oracles.hpp"

namespace espresso {
namespace {

using testing::random_tensor;

// T = 8 split into 4 segments of 2, P = 4, D_v = D_llm = 8.
TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.projector.feature_width = 8;
  cfg.projector.llm_width = 8;
  cfg.projector.segments = 4;
  cfg.task.frames_per_scene = 2;
  cfg.task.patches = 4;
  cfg.task.width = 8;
  cfg.steps = 3;
  cfg.batch = 4;
  return cfg;
}

TEST(CrossEntropy, Examples) {
  EXPECT_NEAR(cross_entropy(Tensor({4}), 0), std::log(4.0), 1e-15);
  EXPECT_GE(cross_entropy(Tensor({4}, {100, 0, 0, 0}), 0), 0.0);
  EXPECT_LT(cross_entropy(Tensor({4}, {100, 0, 0, 0}), 0), 1e-40);
  EXPECT_NEAR(cross_entropy(Tensor({4}, {1000, 0, 0, 0}), 1), 1000.0, 1e-9);
  EXPECT_THROW(cross_entropy(Tensor({4}), 4), std::out_of_range);
}

TEST(CrossEntropy, GradientIsSoftmaxMinusOnehot) {
  Parameter logits{"logits", random_tensor({5}, 1, 2.0)};
  Tape tape;
  tape.backward(cross_entropy(tape.parameter(logits), 3));
  const Tensor p = kernels::softmax_lastdim(logits.value);
  const Tensor g = tape.gradient(logits);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(g[i], p[i] - (i == 3 ? 1.0 : 0.0), 1e-15);

  std::vector<Parameter*> params{&logits};
  const auto result = finite_diff_grad_check(
      [&](Tape& t) { return cross_entropy(t.parameter(logits), 3); }, params, 1e-5);
  EXPECT_LE(result.max_relative_error, 1e-6);
}

class ProbeTest : public ::testing::Test {
 protected:
  Prng rng{3};
  ProbeParams probe = make_probe(3, 4, 5, rng);
  Tensor tokens = random_tensor({3, 4}, 4);
};

TEST_F(ProbeTest, Shapes) {
  EXPECT_EQ(probe.weight.value.shape(), (Shape{4 * 3 * 4 + 4, 5}));
  EXPECT_EQ(probe.classes(), 5u);
  EXPECT_EQ(probe.token_features(), 12u);
  Tape tape;
  EXPECT_THROW(probe_forward(tape.constant(random_tensor({2, 4}, 1)), {1, 0, 0, 0}, probe),
               ShapeError);
}

TEST_F(ProbeTest, ZeroWeightsReturnBias) {
  probe.weight.value.fill(0.0);
  probe.bias.value = Tensor({5}, {1, 2, 3, 4, 5});
  for (std::size_t slot = 0; slot < 4; ++slot) {
    TargetOnehot onehot{};
    onehot[slot] = 1.0;
    Tape tape;
    EXPECT_EQ(probe_forward(tape.constant(tokens), onehot, probe).value(), probe.bias.value);
  }
}

TEST_F(ProbeTest, TargetSlotSelectsDifferentReadout) {
  Tape t0;
  Tape t1;
  const Tensor a = probe_forward(t0.constant(tokens), {1, 0, 0, 0}, probe).value();
  const Tensor b = probe_forward(t1.constant(tokens), {0, 1, 0, 0}, probe).value();
  EXPECT_FALSE(a == b);
}

TEST_F(ProbeTest, GradientCheck) {
  Parameter input{"tokens", tokens};
  std::vector<Parameter*> params{&input, &probe.weight, &probe.bias};
  const auto result = finite_diff_grad_check(
      [&](Tape& t) {
        return cross_entropy(probe_forward(t.parameter(input), {0, 0, 1, 0}, probe), 2);
      },
      params, 1e-5);
  EXPECT_LE(result.max_relative_error, 1e-6);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Parameter p{"p", random_tensor({3}, 1)};
  const Tensor before = p.value;
  std::vector<Parameter*> params{&p};
  OptimState state = make_optim_state(params);
  const std::vector<Tensor> grads{Tensor({3})};
  adam_step(params, grads, state);
  EXPECT_EQ(p.value, before);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepScalarOracle) {
  Parameter p{"p", Tensor({1}, {1.0})};
  std::vector<Parameter*> params{&p};
  OptimState state = make_optim_state(params);
  adam_step(params, std::vector<Tensor>{Tensor({1}, {0.5})}, state);
  // m_hat = g, v_hat = g^2, so the step is -lr * g / (|g| + eps).
  EXPECT_NEAR(p.value[0] - 1.0, -1e-3 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value[0] - 1.0, -0.000999999980000001, 1e-15);
}

TEST(Adam, ShapeMismatch) {
  Parameter p{"p", Tensor({2})};
  std::vector<Parameter*> params{&p};
  OptimState state = make_optim_state(params);
  EXPECT_THROW(adam_step(params, std::vector<Tensor>{Tensor({3})}, state), ShapeError);
}

TEST(Adam, IdenticalRunsIdenticalTrajectories) {
  auto run = [] {
    Parameter p{"p", random_tensor({4}, 2)};
    std::vector<Parameter*> params{&p};
    OptimState state = make_optim_state(params);
    for (std::uint64_t i = 0; i < 20; ++i) {
      adam_step(params, std::vector<Tensor>{random_tensor({4}, 100 + i)}, state);
    }
    return p.value;
  };
  EXPECT_EQ(run(), run());
}

TEST(NeedleModel, FullPipelineGradientCheck) {
  TrainConfig cfg = tiny_config();
  cfg.projector.blocks = 1;
  NeedleModel model = make_needle_model(cfg);
  // Spread weights out so that no parameter group sits in the flat region.
  for (Parameter* p : model.parameters()) {
    if (p->name.find(".gain") == std::string::npos) {
      p->value = random_tensor(p->value.shape(), p->value.size() + p->name.size() * 7, 0.3);
    }
  }
  const NeedleExample example = make_needle_example(5, cfg.task);
  const auto result = finite_diff_grad_check(
      [&](Tape& tape) {
        return cross_entropy(needle_logits(tape, model, example), example.label());
      },
      model.parameters(), 1e-5);
  EXPECT_LE(result.max_relative_error, 1e-4) << result.worst_parameter;
}

TEST(Training, HistoryLengthAndInitialLoss) {
  TrainConfig cfg = tiny_config();
  cfg.steps = 1;
  cfg.batch = 16;
  const auto data = make_needle_dataset(32, 0, cfg.task);
  NeedleModel model = make_needle_model(cfg);
  const auto report = train_needle(cfg, model, data);
  ASSERT_EQ(report.loss_history.size(), 1u);
  EXPECT_NEAR(report.loss_history[0], std::log(4.0), 0.3);
  EXPECT_EQ(report.final_train_loss, report.loss_history[0]);
}

TEST(Training, Errors) {
  TrainConfig cfg = tiny_config();
  NeedleModel model = make_needle_model(cfg);
  EXPECT_THROW(train_needle(cfg, model, NeedleDataset{}), std::invalid_argument);
  const auto data = make_needle_dataset(4, 0, cfg.task);
  cfg.steps = 0;
  EXPECT_THROW(train_needle(cfg, model, data), std::invalid_argument);
  EXPECT_THROW(evaluate_accuracy(model, NeedleDataset{}), std::invalid_argument);

  TrainConfig mismatched = tiny_config();
  mismatched.task.width = 16;
  EXPECT_THROW(make_needle_model(mismatched), ConfigError);
}

TEST(Training, DeterministicLossHistory) {
  const TrainConfig cfg = tiny_config();
  const auto data = make_needle_dataset(16, 0, cfg.task);
  auto run = [&] {
    NeedleModel model = make_needle_model(cfg);
    return train_needle(cfg, model, data).loss_history;
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Training, LossDecreasesOnSmallProblem) {
  TrainConfig cfg = tiny_config();
  cfg.steps = 60;
  cfg.batch = 8;
  cfg.adam.learning_rate = 3e-3;
  const auto data = make_needle_dataset(64, 0, cfg.task);
  NeedleModel model = make_needle_model(cfg);
  const auto report = train_needle(cfg, model, data);
  double head = 0.0;
  double tail = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    head += report.loss_history[i];
    tail += report.loss_history[cfg.steps - 1 - i];
  }
  EXPECT_LT(tail, head);
}

TEST(Evaluation, ArgmaxTiesAndChance) {
  EXPECT_EQ(argmax(Tensor({4}, {0, 100, 0, 0})), 1u);
  EXPECT_EQ(argmax(Tensor({4}, {2, 5, 5, 1})), 1u);
  EXPECT_EQ(argmax(Tensor({4})), 0u);

  TrainConfig cfg = tiny_config();
  NeedleModel model = make_needle_model(cfg);
  model.probe.weight.value.fill(0.0);
  model.probe.bias.value = Tensor({4}, {0, 0, 1, 0});  // always class 2
  const auto data = make_needle_dataset(400, 7, cfg.task, Split::eval);
  const double expected = static_cast<double>(std::count_if(
                              data.examples.begin(), data.examples.end(),
                              [](const NeedleExample& e) { return e.label() == 2; })) /
                          400.0;
  const double accuracy = evaluate_accuracy(model, data);
  EXPECT_EQ(accuracy, expected);
  EXPECT_NEAR(accuracy, 0.25, 5.0 * std::sqrt(0.25 * 0.75 / 400.0));
}

TEST(Evaluation, OrderIndependent) {
  TrainConfig cfg = tiny_config();
  NeedleModel model = make_needle_model(cfg);
  auto data = make_needle_dataset(24, 0, cfg.task);
  const double before = evaluate_accuracy(model, data);
  std::reverse(data.examples.begin(), data.examples.end());
  std::rotate(data.examples.begin(), data.examples.begin() + 5, data.examples.end());
  EXPECT_EQ(evaluate_accuracy(model, data), before);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  TrainConfig cfg = tiny_config();
  NeedleModel trained = make_needle_model(cfg);
  train_needle(cfg, trained, make_needle_dataset(8, 0, cfg.task));
  std::stringstream buffer;
  save_checkpoint(buffer, trained.parameters());

  NeedleModel fresh = make_needle_model(cfg);
  load_checkpoint(buffer, fresh.parameters());
  const auto a = trained.parameters();
  const auto b = fresh.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]->value, b[i]->value) << a[i]->name;

  std::stringstream truncated(buffer.str().substr(0, 40));
  EXPECT_THROW(load_checkpoint(truncated, fresh.parameters()), std::runtime_error);
}

}  // namespace
}  // namespace espresso
