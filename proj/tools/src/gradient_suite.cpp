#include "espresso/cli/gradient_suite.hpp"

#include <array>

#include "espresso/attention/attention.hpp"
#include "espresso/attention/qformer.hpp"
#include "espresso/projectors/projectors.hpp"
#include "espresso/synthbench/prng.hpp"
#include "espresso/tensor/gradcheck.hpp"
#include "espresso/tensor/ops.hpp"
#include "espresso/training/loss.hpp"
#include "espresso/training/trainer.hpp"

namespace espresso::cli {

namespace {

constexpr double kWideStddev = 0.3;

Tensor draw(const Shape& shape, Prng& rng, double stddev = 0.5) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, stddev);
  return t;
}

// Sum of the output weighted by fixed random coefficients, so every output
// entry reaches the loss with a distinct weight.
Var weighted_sum(Var x, const Tensor& weights) {
  return sum(mul(x, x.tape().constant(weights)));
}

void widen(std::span<Parameter* const> params, Prng& rng) {
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      p->value[i] += rng.normal(0.0, kWideStddev);
    }
  }
}

class Suite {
 public:
  Suite(double h, std::uint64_t seed) : h_(h), rng_(seed) {}

  Tensor draw(const Shape& shape, double stddev = 0.5) { return cli::draw(shape, rng_, stddev); }
  Prng& rng() { return rng_; }

  void check(const std::string& name, const ScalarFunction& f, std::vector<Parameter*> params) {
    const GradCheckResult r = finite_diff_grad_check(f, params, h_);
    cases_.push_back({name, r.entries_checked, r.max_relative_error,
                      r.worst_parameter + "[" + std::to_string(r.worst_index) + "]"});
  }

  std::vector<GradientCase> take() { return std::move(cases_); }

 private:
  double h_;
  Prng rng_;
  std::vector<GradientCase> cases_;
};

void op_cases(Suite& s) {
  Parameter a{"a", s.draw({3, 4})};
  Parameter b{"b", s.draw({3, 4})};
  Parameter m{"m", s.draw({4, 2})};
  Parameter batched{"batched", s.draw({2, 3, 4})};
  Parameter w{"w", s.draw({4, 5})};
  Parameter bias{"bias", s.draw({5})};
  Parameter gain{"gain", s.draw({4})};
  Parameter shift{"shift", s.draw({4})};
  const Tensor c34 = s.draw({3, 4}, 1.0);
  const Tensor c32 = s.draw({3, 2}, 1.0);
  const Tensor c232 = s.draw({2, 3, 2}, 1.0);
  const Tensor c235 = s.draw({2, 3, 5}, 1.0);

  s.check("add", [&](Tape& t) { return weighted_sum(add(t.parameter(a), t.parameter(b)), c34); },
          {&a, &b});
  s.check("mul", [&](Tape& t) { return weighted_sum(mul(t.parameter(a), t.parameter(b)), c34); },
          {&a, &b});
  s.check("scale", [&](Tape& t) { return weighted_sum(scale(t.parameter(a), -1.7), c34); }, {&a});
  s.check("matmul",
          [&](Tape& t) { return weighted_sum(matmul(t.parameter(a), t.parameter(m)), c32); },
          {&a, &m});
  s.check("matmul_batched",
          [&](Tape& t) { return weighted_sum(matmul(t.parameter(batched), t.parameter(m)), c232); },
          {&batched, &m});
  s.check("linear",
          [&](Tape& t) {
            return weighted_sum(linear(t.parameter(batched), t.parameter(w), t.parameter(bias)),
                                c235);
          },
          {&batched, &w, &bias});
  s.check("softmax", [&](Tape& t) { return weighted_sum(softmax_lastdim(t.parameter(a)), c34); },
          {&a});
  s.check("layer_norm",
          [&](Tape& t) {
            return weighted_sum(layer_norm(t.parameter(a), t.parameter(gain), t.parameter(shift)), c34);
          },
          {&a, &gain, &shift});
  s.check("gelu", [&](Tape& t) { return weighted_sum(gelu(t.parameter(a)), c34); }, {&a});

  const std::array<std::size_t, 3> perm{2, 0, 1};
  const Tensor c_shape = s.draw({12, 2}, 1.0);
  s.check("shape_ops",
          [&](Tape& t) {
            const std::array<Var, 2> parts{t.parameter(batched), t.parameter(batched)};
            Var joined = concat_axis(parts, 1);        // [2, 6, 4]
            Var sliced = slice_axis(joined, 1, 2, 5);  // [2, 3, 4]
            Var moved = permute(sliced, perm);         // [4, 2, 3]
            Var flat = reshape(moved, {12, 2});
            return weighted_sum(mean_axis(broadcast_leading(flat, 3), 0), c_shape);
          },
          {&batched});
  s.check("cross_entropy", [&](Tape& t) { return cross_entropy(t.parameter(bias), 3); }, {&bias});
}

void attention_cases(Suite& s) {
  AttentionParams attn = make_attention_params("attn", 8, 2, s.rng());
  std::vector<Parameter*> params;
  attn.collect(params);
  widen(params, s.rng());
  Parameter q{"q", s.draw({3, 8})};
  Parameter kv{"kv", s.draw({5, 8})};
  params.push_back(&q);
  params.push_back(&kv);
  const Tensor c = s.draw({3, 8}, 1.0);
  s.check("multihead_attention",
          [&](Tape& t) {
            return weighted_sum(multihead_attention(t.parameter(q), t.parameter(kv), attn), c);
          },
          params);

  QFormerParams qf = make_qformer_params("qformer", QFormerShape{2, 8, 2, 2, 2}, s.rng());
  std::vector<Parameter*> qf_params;
  qf.collect(qf_params);
  widen(qf_params, s.rng());
  qf_params.push_back(&kv);
  const Tensor cq = s.draw({2, 8}, 1.0);
  s.check("qformer",
          [&](Tape& t) {
            return weighted_sum(qformer_forward(t.parameter(kv), qf, PeMode::sinusoidal), cq);
          },
          qf_params);
}

void espresso_case(Suite& s) {
  EspressoConfig cfg;
  cfg.feature_width = 8;
  cfg.llm_width = 8;
  cfg.spatial_queries = 2;
  cfg.temporal_queries = 2;
  cfg.segments = 2;
  cfg.heads = 2;
  cfg.blocks = 1;
  cfg.ffn_mult = 2;
  EspressoParams params = param_init(cfg, 11);
  std::vector<Parameter*> all = params.parameters();
  widen(all, s.rng());
  const FeatureVideo video(s.draw({4, 3, 8}, 1.0));
  const Tensor c = s.draw({8, 8}, 1.0);
  s.check("espresso_forward",
          [&](Tape& t) {
            return weighted_sum(espresso_forward(t, video, params, cfg).tokens, c);
          },
          all);
}

void pipeline_case(Suite& s) {
  TrainConfig cfg;
  cfg.projector.feature_width = 8;
  cfg.projector.llm_width = 8;
  cfg.projector.segments = kNeedleScenes;
  cfg.task.frames_per_scene = 2;
  cfg.task.patches = 4;
  cfg.task.width = 8;
  NeedleModel model = make_needle_model(cfg);
  const std::vector<Parameter*> params = model.parameters();
  widen(params, s.rng());
  const NeedleExample example = make_needle_example(5, cfg.task);
  s.check("pipeline",
          [&](Tape& tape) {
            return cross_entropy(needle_logits(tape, model, example), example.label());
          },
          params);
}

}  // namespace

std::vector<GradientCase> run_gradient_suite(double h, std::uint64_t seed) {
  Suite suite(h, seed);
  op_cases(suite);
  attention_cases(suite);
  espresso_case(suite);
  pipeline_case(suite);
  return suite.take();
}

}  // namespace espresso::cli
