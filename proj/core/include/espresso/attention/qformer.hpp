#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "espresso/attention/attention.hpp"
#include "espresso/synthbench/prng.hpp"
#include "espresso/tensor/tape.hpp"

namespace espresso {

enum class PeMode { sinusoidal, disabled };

PeMode parse_pe_mode(const std::string& text);
std::string to_string(PeMode mode);

/// PE[pos][2i] = sin(pos / 10000^(2i/D)), PE[pos][2i+1] = cos(pos / 10000^(2i/D)).
/// Throws std::invalid_argument for odd D.
Tensor sinusoidal_table(std::size_t length, std::size_t width);

/// Adds the table along the second-to-last axis of a [L x D] or [B x L x D]
/// tensor; `disabled` returns the input untouched.
Tensor apply_positional_encoding(const Tensor& x, PeMode mode);
Var apply_positional_encoding(Var x, PeMode mode);

struct LayerNormParams {
  Parameter gain;
  Parameter bias;
};

struct QFormerBlockParams {
  LayerNormParams ln_self;
  AttentionParams self_attention;
  LayerNormParams ln_query;
  LayerNormParams ln_kv;
  AttentionParams cross_attention;
  LayerNormParams ln_ffn;
  Parameter ffn_in_weight;   // [D x ffn_mult*D]
  Parameter ffn_in_bias;
  Parameter ffn_out_weight;  // [ffn_mult*D x D]
  Parameter ffn_out_bias;

  void collect(std::vector<Parameter*>& out);
};

/// Learnable queries followed by `blocks` pre-norm residual blocks.
struct QFormerParams {
  Parameter queries;  // [L x D]
  std::vector<QFormerBlockParams> blocks;

  std::size_t query_count() const { return queries.value.dim(0); }
  std::size_t width() const { return queries.value.dim(1); }
  void collect(std::vector<Parameter*>& out);
};

struct QFormerShape {
  std::size_t queries = 1;
  std::size_t width = 0;
  std::size_t heads = 4;
  std::size_t blocks = 2;
  std::size_t ffn_mult = 4;
};

QFormerParams make_qformer_params(const std::string& prefix, const QFormerShape& shape,
                                  Prng& rng);

/// x <- x + SelfAttn(LN(x)); x <- x + CrossAttn(LN(x), LN(kv)); x <- x + FFN(LN(x)).
Var qformer_block(Var x, Var kv, QFormerBlockParams& block);

/// kv: [Lkv x D] -> [L x D], or batched [B x Lkv x D] -> [B x L x D] with the
/// queries shared by every batch entry.
Var qformer_forward(Var kv, QFormerParams& params, PeMode pe);

}  // namespace espresso
