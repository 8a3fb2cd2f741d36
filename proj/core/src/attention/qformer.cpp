#include "espresso/attention/qformer.hpp"

#include <cmath>
#include <stdexcept>

#include "espresso/tensor/ops.hpp"

namespace espresso {

PeMode parse_pe_mode(const std::string& text) {
  if (text == "sinusoidal") return PeMode::sinusoidal;
  if (text == "disabled") return PeMode::disabled;
  throw std::invalid_argument("unknown positional encoding mode '" + text + "'");
}

std::string to_string(PeMode mode) {
  return mode == PeMode::sinusoidal ? "sinusoidal" : "disabled";
}

Tensor sinusoidal_table(std::size_t length, std::size_t width) {
  if (width % 2 != 0) {
    throw std::invalid_argument("sinusoidal encoding needs an even width, got " +
                                std::to_string(width));
  }
  Tensor table({length, width});
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < width / 2; ++i) {
      const double exponent = static_cast<double>(2 * i) / static_cast<double>(width);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      table[pos * width + 2 * i] = std::sin(angle);
      table[pos * width + 2 * i + 1] = std::cos(angle);
    }
  }
  return table;
}

Tensor apply_positional_encoding(const Tensor& x, PeMode mode) {
  if (mode == PeMode::disabled) return x;
  if (x.rank() < 2) throw ShapeError("positional encoding needs rank >= 2, got " + to_string(x.shape()));
  const std::size_t width = x.shape().back();
  const std::size_t length = x.shape()[x.rank() - 2];
  const Tensor table = sinusoidal_table(length, width);
  Tensor out = x;
  const std::size_t block = length * width;
  for (std::size_t b = 0; b < x.size() / block; ++b) {
    for (std::size_t i = 0; i < block; ++i) out[b * block + i] += table[i];
  }
  return out;
}

Var apply_positional_encoding(Var x, PeMode mode) {
  if (mode == PeMode::disabled) return x;
  Tensor encoded = apply_positional_encoding(x.value(), mode);
  // Adding a constant leaves the gradient unchanged.
  return x.tape().record(std::move(encoded), {x},
                         [x](Tape& tape, const Tensor& g) { tape.accumulate(x, g); });
}

namespace {

LayerNormParams make_layer_norm(const std::string& prefix, std::size_t width) {
  return LayerNormParams{constant_parameter(prefix + ".gain", {width}, 1.0),
                         constant_parameter(prefix + ".bias", {width}, 0.0)};
}

Var apply_layer_norm(Var x, LayerNormParams& ln) {
  Tape& tape = x.tape();
  return layer_norm(x, tape.parameter(ln.gain), tape.parameter(ln.bias));
}

}  // namespace

void QFormerBlockParams::collect(std::vector<Parameter*>& out) {
  out.insert(out.end(), {&ln_self.gain, &ln_self.bias});
  self_attention.collect(out);
  out.insert(out.end(), {&ln_query.gain, &ln_query.bias, &ln_kv.gain, &ln_kv.bias});
  cross_attention.collect(out);
  out.insert(out.end(), {&ln_ffn.gain, &ln_ffn.bias, &ffn_in_weight, &ffn_in_bias,
                         &ffn_out_weight, &ffn_out_bias});
}

void QFormerParams::collect(std::vector<Parameter*>& out) {
  out.push_back(&queries);
  for (auto& block : blocks) block.collect(out);
}

QFormerParams make_qformer_params(const std::string& prefix, const QFormerShape& shape,
                                  Prng& rng) {
  if (shape.queries == 0) throw std::invalid_argument(prefix + ": query count must be >= 1");
  if (shape.blocks == 0) throw std::invalid_argument(prefix + ": block count must be >= 1");
  if (shape.ffn_mult == 0) throw std::invalid_argument(prefix + ": ffn_mult must be >= 1");
  const std::size_t d = shape.width;
  const std::size_t hidden = shape.ffn_mult * d;
  QFormerParams params;
  params.queries = normal_parameter(prefix + ".queries", {shape.queries, d}, rng);
  params.blocks.reserve(shape.blocks);
  for (std::size_t b = 0; b < shape.blocks; ++b) {
    const std::string p = prefix + ".block" + std::to_string(b);
    QFormerBlockParams block;
    block.ln_self = make_layer_norm(p + ".ln_self", d);
    block.self_attention = make_attention_params(p + ".self", d, shape.heads, rng);
    block.ln_query = make_layer_norm(p + ".ln_query", d);
    block.ln_kv = make_layer_norm(p + ".ln_kv", d);
    block.cross_attention = make_attention_params(p + ".cross", d, shape.heads, rng);
    block.ln_ffn = make_layer_norm(p + ".ln_ffn", d);
    block.ffn_in_weight = normal_parameter(p + ".ffn_in.w", {d, hidden}, rng);
    block.ffn_in_bias = normal_parameter(p + ".ffn_in.b", {hidden}, rng);
    block.ffn_out_weight = normal_parameter(p + ".ffn_out.w", {hidden, d}, rng);
    block.ffn_out_bias = normal_parameter(p + ".ffn_out.b", {d}, rng);
    params.blocks.push_back(std::move(block));
  }
  return params;
}

Var qformer_block(Var x, Var kv, QFormerBlockParams& block) {
  Tape& tape = x.tape();
  Var normed = apply_layer_norm(x, block.ln_self);
  x = add(x, multihead_attention(normed, normed, block.self_attention));
  x = add(x, multihead_attention(apply_layer_norm(x, block.ln_query),
                                 apply_layer_norm(kv, block.ln_kv), block.cross_attention));
  Var hidden = gelu(linear(apply_layer_norm(x, block.ln_ffn), tape.parameter(block.ffn_in_weight),
                           tape.parameter(block.ffn_in_bias)));
  return add(x, linear(hidden, tape.parameter(block.ffn_out_weight),
                       tape.parameter(block.ffn_out_bias)));
}

Var qformer_forward(Var kv, QFormerParams& params, PeMode pe) {
  Tape& tape = kv.tape();
  const Shape& shape = kv.shape();
  if ((shape.size() != 2 && shape.size() != 3) || shape.back() != params.width()) {
    throw ShapeError("qformer expects [Lkv x " + std::to_string(params.width()) +
                     "] or a batch of them, got " + to_string(shape));
  }
  Var keys = apply_positional_encoding(kv, pe);
  Var x = tape.parameter(params.queries);
  if (shape.size() == 3) x = broadcast_leading(x, shape[0]);
  for (auto& block : params.blocks) x = qformer_block(x, keys, block);
  return x;
}

}  // namespace espresso
