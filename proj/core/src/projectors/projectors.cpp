#include "espresso/projectors/projectors.hpp"

#include <array>

#include "espresso/tensor/ops.hpp"

namespace espresso {

void OutMlpParams::collect(std::vector<Parameter*>& out) {
  out.insert(out.end(), {&in_weight, &in_bias, &out_weight, &out_bias});
}

OutMlpParams make_out_mlp(std::size_t feature_width, std::size_t llm_width, Prng& rng) {
  OutMlpParams mlp;
  mlp.in_weight = normal_parameter("out_mlp.in.w", {feature_width, llm_width}, rng);
  mlp.in_bias = normal_parameter("out_mlp.in.b", {llm_width}, rng);
  mlp.out_weight = normal_parameter("out_mlp.out.w", {llm_width, llm_width}, rng);
  mlp.out_bias = normal_parameter("out_mlp.out.b", {llm_width}, rng);
  return mlp;
}

Var out_mlp_forward(Var tokens, OutMlpParams& mlp) {
  Tape& tape = tokens.tape();
  Var hidden = gelu(linear(tokens, tape.parameter(mlp.in_weight), tape.parameter(mlp.in_bias)));
  return linear(hidden, tape.parameter(mlp.out_weight), tape.parameter(mlp.out_bias));
}

std::vector<Parameter*> EspressoParams::parameters() {
  std::vector<Parameter*> out;
  temporal_pooler.collect(out);
  spatial_pooler.collect(out);
  spatial_compressor.collect(out);
  temporal_compressor.collect(out);
  out_mlp.collect(out);
  return out;
}

std::vector<Parameter*> ResamplerParams::parameters() {
  std::vector<Parameter*> out;
  resampler.collect(out);
  out_mlp.collect(out);
  return out;
}

EspressoParams param_init(const EspressoConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Prng rng(seed);
  EspressoParams params;
  params.temporal_pooler = make_qformer_params("temporal_pooler", cfg.qformer_shape(1), rng);
  params.spatial_pooler = make_qformer_params("spatial_pooler", cfg.qformer_shape(1), rng);
  params.spatial_compressor =
      make_qformer_params("spatial_compressor", cfg.qformer_shape(cfg.spatial_queries), rng);
  params.temporal_compressor =
      make_qformer_params("temporal_compressor", cfg.qformer_shape(cfg.temporal_queries), rng);
  params.out_mlp = make_out_mlp(cfg.feature_width, cfg.llm_width, rng);
  return params;
}

namespace {

void require_segment(Var segment) {
  if (segment.shape().size() != 3) {
    throw ShapeError("segment must be [T_s x P x D_v], got " + to_string(segment.shape()));
  }
}

void require_features(Var features) {
  if (features.shape().size() != 2) {
    throw ShapeError("pooled features must be [L x D_v], got " + to_string(features.shape()));
  }
}

void require_width(const FeatureVideo& video, std::size_t width) {
  if (video.width() != width) {
    throw ShapeError("video width " + std::to_string(video.width()) +
                     " does not match configured D_v " + std::to_string(width));
  }
}

}  // namespace

Var temporal_pool(Var segment, QFormerParams& pooler, PeMode pe) {
  require_segment(segment);
  static constexpr std::array<std::size_t, 3> kByLocation{1, 0, 2};
  const std::size_t patches = segment.shape()[1];
  // [P x T_s x D]: each spatial location is one batch entry over time.
  Var pooled = qformer_forward(permute(segment, kByLocation), pooler, pe);
  return reshape(pooled, {patches, pooler.width()});
}

Var spatial_pool(Var segment, QFormerParams& pooler, PeMode pe) {
  require_segment(segment);
  const std::size_t frames = segment.shape()[0];
  Var pooled = qformer_forward(segment, pooler, pe);
  return reshape(pooled, {frames, pooler.width()});
}

Var spatial_compress(Var spatial_features, QFormerParams& compressor, PeMode pe) {
  require_features(spatial_features);
  return qformer_forward(spatial_features, compressor, pe);
}

Var temporal_compress(Var temporal_features, QFormerParams& compressor, PeMode pe) {
  require_features(temporal_features);
  return qformer_forward(temporal_features, compressor, pe);
}

RecordedOutput espresso_forward(Tape& tape, const FeatureVideo& video, EspressoParams& params,
                                const EspressoConfig& cfg) {
  cfg.validate();
  require_width(video, cfg.feature_width);
  if (params.spatial_compressor.query_count() != cfg.spatial_queries ||
      params.temporal_compressor.query_count() != cfg.temporal_queries ||
      params.temporal_pooler.width() != cfg.feature_width) {
    throw ShapeError("espresso parameters do not match the configuration");
  }
  const auto bounds = segment_bounds(video.frames(), cfg.segments);
  Var input = tape.constant(video.features());

  RecordedOutput result;
  std::vector<Var> blocks;
  blocks.reserve(bounds.size());
  for (std::size_t s = 0; s < bounds.size(); ++s) {
    Var segment = slice_axis(input, 0, bounds[s].first, bounds[s].second);
    Var spatial = spatial_compress(temporal_pool(segment, params.temporal_pooler, cfg.pe),
                                   params.spatial_compressor, cfg.pe);
    Var temporal = temporal_compress(spatial_pool(segment, params.spatial_pooler, cfg.pe),
                                     params.temporal_compressor, cfg.pe);
    const std::array<Var, 2> parts{spatial, temporal};
    blocks.push_back(concat_axis(parts, 0));
    result.provenance.insert(result.provenance.end(), cfg.spatial_queries,
                             TokenOrigin{s, TokenPath::spatial});
    result.provenance.insert(result.provenance.end(), cfg.temporal_queries,
                             TokenOrigin{s, TokenPath::temporal});
  }
  result.tokens = out_mlp_forward(concat_axis(blocks, 0), params.out_mlp);
  return result;
}

ProjectorOutput espresso_forward(const FeatureVideo& video, EspressoParams& params,
                                 const EspressoConfig& cfg) {
  Tape tape;
  return espresso_forward(tape, video, params, cfg).materialize();
}

OutMlpParams mlp_baseline_init(const EspressoConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Prng rng(seed);
  return make_out_mlp(cfg.feature_width, cfg.llm_width, rng);
}

ResamplerParams pr_baseline_init(const EspressoConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Prng rng(seed);
  ResamplerParams params;
  params.resampler = make_qformer_params("resampler", cfg.qformer_shape(cfg.resampler_queries), rng);
  params.out_mlp = make_out_mlp(cfg.feature_width, cfg.llm_width, rng);
  return params;
}

OutMlpParams meanpool_baseline_init(const EspressoConfig& cfg, std::uint64_t seed) {
  return mlp_baseline_init(cfg, seed);
}

namespace {

void require_mlp_width(const FeatureVideo& video, const OutMlpParams& mlp) {
  require_width(video, mlp.in_weight.value.dim(0));
}

}  // namespace

RecordedOutput mlp_baseline_forward(Tape& tape, const FeatureVideo& video, OutMlpParams& mlp) {
  require_mlp_width(video, mlp);
  const std::size_t frames = video.frames();
  const std::size_t patches = video.patches();
  Var flat = tape.constant(video.features().reshaped({frames * patches, video.width()}));
  RecordedOutput result{out_mlp_forward(flat, mlp), {}};
  result.provenance.reserve(frames * patches);
  for (std::size_t f = 0; f < frames; ++f) {
    result.provenance.insert(result.provenance.end(), patches, TokenOrigin{f, TokenPath::patch});
  }
  return result;
}

RecordedOutput pr_baseline_forward(Tape& tape, const FeatureVideo& video, ResamplerParams& params,
                                   PeMode pe) {
  require_width(video, params.resampler.width());
  Var flat = tape.constant(
      video.features().reshaped({video.frames() * video.patches(), video.width()}));
  Var queries = qformer_forward(flat, params.resampler, pe);
  return RecordedOutput{out_mlp_forward(queries, params.out_mlp),
                        std::vector<TokenOrigin>(params.resampler.query_count(),
                                                 TokenOrigin{0, TokenPath::query})};
}

RecordedOutput meanpool_baseline_forward(Tape& tape, const FeatureVideo& video,
                                         OutMlpParams& mlp) {
  require_mlp_width(video, mlp);
  Var input = tape.constant(video.features());
  const std::array<Var, 2> parts{mean_axis(input, 0), mean_axis(input, 1)};
  RecordedOutput result{out_mlp_forward(concat_axis(parts, 0), mlp), {}};
  result.provenance.insert(result.provenance.end(), video.patches(),
                           TokenOrigin{0, TokenPath::spatial});
  result.provenance.insert(result.provenance.end(), video.frames(),
                           TokenOrigin{0, TokenPath::temporal});
  return result;
}

Projector Projector::create(ProjectorKind kind, const EspressoConfig& cfg) {
  switch (kind) {
    case ProjectorKind::espresso: return Projector(kind, cfg, param_init(cfg, cfg.seed));
    case ProjectorKind::mlp: return Projector(kind, cfg, mlp_baseline_init(cfg, cfg.seed));
    case ProjectorKind::pr: return Projector(kind, cfg, pr_baseline_init(cfg, cfg.seed));
    case ProjectorKind::meanpool:
      return Projector(kind, cfg, meanpool_baseline_init(cfg, cfg.seed));
  }
  throw ConfigError("kind", "unsupported projector kind");
}

RecordedOutput Projector::forward(Tape& tape, const FeatureVideo& video) {
  switch (kind_) {
    case ProjectorKind::espresso:
      return espresso_forward(tape, video, std::get<EspressoParams>(*params_), cfg_);
    case ProjectorKind::mlp:
      return mlp_baseline_forward(tape, video, std::get<OutMlpParams>(*params_));
    case ProjectorKind::pr:
      return pr_baseline_forward(tape, video, std::get<ResamplerParams>(*params_), cfg_.pe);
    case ProjectorKind::meanpool:
      return meanpool_baseline_forward(tape, video, std::get<OutMlpParams>(*params_));
  }
  throw ConfigError("kind", "unsupported projector kind");
}

ProjectorOutput Projector::forward(const FeatureVideo& video) {
  Tape tape;
  return forward(tape, video).materialize();
}

std::size_t Projector::output_length(std::size_t frames, std::size_t patches) const {
  switch (kind_) {
    case ProjectorKind::espresso:
      segment_bounds(frames, cfg_.segments);
      return cfg_.segments * (cfg_.spatial_queries + cfg_.temporal_queries);
    case ProjectorKind::mlp: return frames * patches;
    case ProjectorKind::pr: return cfg_.resampler_queries;
    case ProjectorKind::meanpool: return frames + patches;
  }
  return 0;
}

std::vector<Parameter*> Projector::parameters() {
  return std::visit(
      [](auto& params) {
        if constexpr (std::is_same_v<std::decay_t<decltype(params)>, OutMlpParams>) {
          std::vector<Parameter*> out;
          params.collect(out);
          return out;
        } else {
          return params.parameters();
        }
      },
      *params_);
}

}  // namespace espresso
