#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "espresso/synthbench/prng.hpp"
#include "espresso/tensor/tape.hpp"

namespace espresso {

inline constexpr double kInitStddev = 0.02;

/// Normal(0, stddev^2) entries drawn in row-major order from `rng`.
Parameter normal_parameter(std::string name, Shape shape, Prng& rng,
                           double stddev = kInitStddev);
Parameter constant_parameter(std::string name, Shape shape, double value);

/// Bias-free multi-head projections. Width D must be divisible by heads.
struct AttentionParams {
  Parameter w_q;
  Parameter w_k;
  Parameter w_v;
  Parameter w_o;
  std::size_t heads = 1;

  std::size_t width() const { return w_q.value.dim(0); }
  std::size_t head_width() const { return width() / heads; }
  void collect(std::vector<Parameter*>& out);
};

AttentionParams make_attention_params(const std::string& prefix, std::size_t width,
                                      std::size_t heads, Prng& rng);

/// When enabled, every attention call verifies that each weight row sums to
/// one within 1e-12 and throws std::logic_error otherwise. Off by default.
void set_attention_weight_check(bool enabled);
bool attention_weight_check();

/// softmax(Q K^T / sqrt(d_h)) V per head, heads concatenated, then W_O.
/// q: [Lq x D] or [B x Lq x D]; kv: [Lkv x D] or [B x Lkv x D] with the same
/// rank and batch as q. Self-attention is the q == kv case.
Var multihead_attention(Var q, Var kv, AttentionParams& params);

}  // namespace espresso
