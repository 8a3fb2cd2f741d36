#include "espresso/costmodel/cost_model.hpp"

#include <stdexcept>
#include <string>

#include "espresso/projectors/projectors.hpp"
#include "espresso/synthbench/prng.hpp"

namespace espresso {

namespace {

void require_input(std::size_t frames, std::size_t patches) {
  if (frames == 0) throw std::invalid_argument("T: frame count must be >= 1");
  if (patches == 0) throw std::invalid_argument("P: patch count must be >= 1");
}

std::uint64_t out_mlp_params(const EspressoConfig& c) {
  const std::uint64_t dv = c.feature_width;
  const std::uint64_t dl = c.llm_width;
  return dv * dl + dl + dl * dl + dl;
}

std::uint64_t out_mlp_macs(const EspressoConfig& c, std::uint64_t tokens) {
  const std::uint64_t dv = c.feature_width;
  const std::uint64_t dl = c.llm_width;
  return tokens * (dv * dl + dl * dl);
}

}  // namespace

std::uint64_t qformer_param_count(const EspressoConfig& cfg, std::size_t queries) {
  const std::uint64_t d = cfg.feature_width;
  const std::uint64_t hidden = cfg.ffn_mult * d;
  const std::uint64_t attention = 2 * 4 * d * d;   // self + cross, four projections each
  const std::uint64_t norms = 4 * 2 * d;           // four gain/bias pairs
  const std::uint64_t ffn = d * hidden + hidden + hidden * d + d;
  return queries * d + cfg.blocks * (attention + norms + ffn);
}

std::uint64_t qformer_macs(const EspressoConfig& cfg, std::size_t batch, std::size_t queries,
                           std::size_t keys) {
  const std::uint64_t d = cfg.feature_width;
  const std::uint64_t l = queries;
  const std::uint64_t lkv = keys;
  const std::uint64_t hidden = cfg.ffn_mult * d;
  // Per head h: Lq*Lkv*d_h for scores and again for the weighted sum; summed
  // over heads that is Lq*Lkv*D each.
  const std::uint64_t self_attention = 4 * l * d * d + 2 * l * l * d;
  const std::uint64_t cross_attention = 2 * l * d * d + 2 * lkv * d * d + 2 * l * lkv * d;
  const std::uint64_t ffn = 2 * l * d * hidden;
  return static_cast<std::uint64_t>(batch) * cfg.blocks *
         (self_attention + cross_attention + ffn);
}

std::uint64_t token_count(const ProjectorDescriptor& d, std::size_t frames, std::size_t patches) {
  require_input(frames, patches);
  const auto& c = d.config;
  switch (d.kind) {
    case ProjectorKind::espresso:
      segment_bounds(frames, c.segments);
      return static_cast<std::uint64_t>(c.segments) * (c.spatial_queries + c.temporal_queries);
    case ProjectorKind::mlp: return static_cast<std::uint64_t>(frames) * patches;
    case ProjectorKind::pr: return c.resampler_queries;
    case ProjectorKind::meanpool: return static_cast<std::uint64_t>(frames) + patches;
  }
  throw std::invalid_argument("unknown projector kind");
}

std::uint64_t param_count(const ProjectorDescriptor& d) {
  const auto& c = d.config;
  c.validate();
  switch (d.kind) {
    case ProjectorKind::espresso:
      return 2 * qformer_param_count(c, 1) + qformer_param_count(c, c.spatial_queries) +
             qformer_param_count(c, c.temporal_queries) + out_mlp_params(c);
    case ProjectorKind::pr: return qformer_param_count(c, c.resampler_queries) + out_mlp_params(c);
    case ProjectorKind::mlp:
    case ProjectorKind::meanpool: return out_mlp_params(c);
  }
  throw std::invalid_argument("unknown projector kind");
}

std::uint64_t flop_estimate(const ProjectorDescriptor& d, std::size_t frames, std::size_t patches) {
  const auto& c = d.config;
  c.validate();
  const std::uint64_t tokens = token_count(d, frames, patches);
  switch (d.kind) {
    case ProjectorKind::espresso: {
      std::uint64_t total = 0;
      for (auto [begin, end] : segment_bounds(frames, c.segments)) {
        const std::size_t seg = end - begin;
        total += qformer_macs(c, patches, 1, seg);                // temporal pooler
        total += qformer_macs(c, seg, 1, patches);                // spatial pooler
        total += qformer_macs(c, 1, c.spatial_queries, patches);  // spatial compressor
        total += qformer_macs(c, 1, c.temporal_queries, seg);     // temporal compressor
      }
      return total + out_mlp_macs(c, tokens);
    }
    case ProjectorKind::pr:
      return qformer_macs(c, 1, c.resampler_queries, frames * patches) + out_mlp_macs(c, tokens);
    case ProjectorKind::mlp:
    case ProjectorKind::meanpool: return out_mlp_macs(c, tokens);
  }
  throw std::invalid_argument("unknown projector kind");
}

std::vector<CostRow> scaling_report(std::span<const ProjectorDescriptor> kinds,
                                    std::span<const std::size_t> frames, std::size_t patches,
                                    const ScalingOptions& options) {
  if (kinds.empty()) throw std::invalid_argument("kind: at least one projector kind is required");
  if (frames.empty()) throw std::invalid_argument("frames: at least one frame count is required");
  std::vector<CostRow> rows;
  rows.reserve(kinds.size() * frames.size());
  for (const auto& d : kinds) {
    for (std::size_t t : frames) {
      CostRow row;
      row.kind = d.kind;
      row.frames = t;
      row.patches = patches;
      row.llm_input_tokens = token_count(d, t, patches);
      row.projector_params = param_count(d);
      row.projector_macs = flop_estimate(d, t, patches);
      if (options.measure) {
        Projector projector = Projector::create(d.kind, d.config);
        Prng rng(d.config.seed);
        Tensor features({t, patches, d.config.feature_width});
        for (auto& v : features.data()) v = rng.normal();
        const FeatureVideo video(std::move(features));
        row.runtime = measure_runtime([&] { (void)projector.forward(video); }, options.warmups,
                                      options.runs);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace espresso
