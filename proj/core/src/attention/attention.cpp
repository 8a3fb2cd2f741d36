#include "espresso/attention/attention.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "espresso/tensor/ops.hpp"

namespace espresso {

namespace {

std::atomic<bool> weight_check_enabled{false};

void verify_weight_rows(const Tensor& weights) {
  const std::size_t width = weights.shape().back();
  const std::size_t rows = weights.size() / width;
  for (std::size_t row = 0; row < rows; ++row) {
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) total += weights[row * width + j];
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::logic_error("attention weight row " + std::to_string(row) + " sums to " +
                             std::to_string(total));
    }
  }
}

}  // namespace

Parameter normal_parameter(std::string name, Shape shape, Prng& rng, double stddev) {
  Tensor value(std::move(shape));
  for (auto& v : value.data()) v = rng.normal(0.0, stddev);
  return Parameter{std::move(name), std::move(value)};
}

Parameter constant_parameter(std::string name, Shape shape, double value) {
  return Parameter{std::move(name), Tensor(std::move(shape), value)};
}

void AttentionParams::collect(std::vector<Parameter*>& out) {
  out.insert(out.end(), {&w_q, &w_k, &w_v, &w_o});
}

AttentionParams make_attention_params(const std::string& prefix, std::size_t width,
                                      std::size_t heads, Prng& rng) {
  if (heads == 0 || width % heads != 0) {
    throw std::invalid_argument("attention width " + std::to_string(width) +
                                " is not divisible by heads " + std::to_string(heads));
  }
  AttentionParams p;
  p.w_q = normal_parameter(prefix + ".w_q", {width, width}, rng);
  p.w_k = normal_parameter(prefix + ".w_k", {width, width}, rng);
  p.w_v = normal_parameter(prefix + ".w_v", {width, width}, rng);
  p.w_o = normal_parameter(prefix + ".w_o", {width, width}, rng);
  p.heads = heads;
  return p;
}

void set_attention_weight_check(bool enabled) { weight_check_enabled.store(enabled); }
bool attention_weight_check() { return weight_check_enabled.load(); }

Var multihead_attention(Var q, Var kv, AttentionParams& params) {
  Tape& tape = q.tape();
  const bool batched = q.shape().size() == 3;
  if (q.shape().size() != kv.shape().size() || (q.shape().size() != 2 && !batched)) {
    throw ShapeError("attention expects matching rank-2 or rank-3 inputs, got " +
                     to_string(q.shape()) + " and " + to_string(kv.shape()));
  }
  if (!batched) {
    Var out = multihead_attention(reshape(q, {1, q.shape()[0], q.shape()[1]}),
                                  reshape(kv, {1, kv.shape()[0], kv.shape()[1]}), params);
    return reshape(out, {out.shape()[1], out.shape()[2]});
  }

  const std::size_t width = params.width();
  const std::size_t heads = params.heads;
  if (heads == 0 || width % heads != 0) {
    throw std::invalid_argument("attention width " + std::to_string(width) +
                                " is not divisible by heads " + std::to_string(heads));
  }
  const std::size_t batch = q.shape()[0];
  const std::size_t lq = q.shape()[1];
  const std::size_t lkv = kv.shape()[1];
  if (q.shape()[2] != width || kv.shape()[2] != width || kv.shape()[0] != batch) {
    throw ShapeError("attention shape mismatch: q " + to_string(q.shape()) + ", kv " +
                     to_string(kv.shape()) + ", width " + std::to_string(width));
  }
  const std::size_t dh = width / heads;

  Var query = matmul(q, tape.parameter(params.w_q));
  Var key = matmul(kv, tape.parameter(params.w_k));
  Var value = matmul(kv, tape.parameter(params.w_v));

  // [B, L, D] -> [B, h, L, dh]; keys go straight to [B, h, dh, Lkv].
  static constexpr std::array<std::size_t, 4> kSplit{0, 2, 1, 3};
  static constexpr std::array<std::size_t, 4> kSplitTransposed{0, 2, 3, 1};
  Var qh = permute(reshape(query, {batch, lq, heads, dh}), kSplit);
  Var kt = permute(reshape(key, {batch, lkv, heads, dh}), kSplitTransposed);
  Var vh = permute(reshape(value, {batch, lkv, heads, dh}), kSplit);

  Var scores = scale(matmul(qh, kt), 1.0 / std::sqrt(static_cast<double>(dh)));
  Var weights = softmax_lastdim(scores);
  if (attention_weight_check()) verify_weight_rows(weights.value());

  Var mixed = permute(matmul(weights, vh), kSplit);  // [B, Lq, h, dh]
  return matmul(reshape(mixed, {batch, lq, width}), tape.parameter(params.w_o));
}

}  // namespace espresso
