#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "espresso/attention/qformer.hpp"
#include "espresso/projectors/config.hpp"
#include "espresso/projectors/feature_video.hpp"
#include "espresso/tensor/tape.hpp"

namespace espresso {

enum class TokenPath { spatial, temporal, patch, query };

/// Which segment (or frame, for the MLP baseline) and which path produced a token.
struct TokenOrigin {
  std::size_t segment = 0;
  TokenPath path = TokenPath::spatial;

  friend bool operator==(const TokenOrigin&, const TokenOrigin&) = default;
};

struct ProjectorOutput {
  Tensor tokens;  // [L_out x D_llm]
  std::vector<TokenOrigin> provenance;

  std::size_t length() const { return tokens.dim(0); }
  friend bool operator==(const ProjectorOutput&, const ProjectorOutput&) = default;
};

/// Projector output still attached to the tape that produced it.
struct RecordedOutput {
  Var tokens;
  std::vector<TokenOrigin> provenance;

  ProjectorOutput materialize() const { return {tokens.value(), provenance}; }
};

/// D_v -> D_llm -> D_llm with gelu in between.
struct OutMlpParams {
  Parameter in_weight;
  Parameter in_bias;
  Parameter out_weight;
  Parameter out_bias;

  void collect(std::vector<Parameter*>& out);
};

OutMlpParams make_out_mlp(std::size_t feature_width, std::size_t llm_width, Prng& rng);
Var out_mlp_forward(Var tokens, OutMlpParams& mlp);

struct EspressoParams {
  QFormerParams temporal_pooler;      // L = 1, one per spatial location
  QFormerParams spatial_pooler;       // L = 1, one per frame
  QFormerParams spatial_compressor;   // L = p
  QFormerParams temporal_compressor;  // L = t
  OutMlpParams out_mlp;

  std::vector<Parameter*> parameters();
};

/// Deterministic: equal (cfg, seed) gives bit-identical parameters. Weights
/// and queries ~ Normal(0, 0.02^2); layer-norm gains 1, biases 0.
EspressoParams param_init(const EspressoConfig& cfg, std::uint64_t seed);

// Building blocks over one segment. `segment` is [T_s x P x D_v].
Var temporal_pool(Var segment, QFormerParams& pooler, PeMode pe);    // -> [P x D_v]
Var spatial_pool(Var segment, QFormerParams& pooler, PeMode pe);     // -> [T_s x D_v]
Var spatial_compress(Var spatial_features, QFormerParams& compressor, PeMode pe);    // -> [p x D_v]
Var temporal_compress(Var temporal_features, QFormerParams& compressor, PeMode pe);  // -> [t x D_v]

/// Per segment, spatial tokens then temporal tokens; segments in order; one
/// shared MLP into D_llm. Output length is n(p + t) for any T >= n and P.
RecordedOutput espresso_forward(Tape& tape, const FeatureVideo& video, EspressoParams& params,
                                const EspressoConfig& cfg);
ProjectorOutput espresso_forward(const FeatureVideo& video, EspressoParams& params,
                                 const EspressoConfig& cfg);

// Baselines.

struct ResamplerParams {
  QFormerParams resampler;
  OutMlpParams out_mlp;

  std::vector<Parameter*> parameters();
};

OutMlpParams mlp_baseline_init(const EspressoConfig& cfg, std::uint64_t seed);
ResamplerParams pr_baseline_init(const EspressoConfig& cfg, std::uint64_t seed);
OutMlpParams meanpool_baseline_init(const EspressoConfig& cfg, std::uint64_t seed);

/// Every (frame, patch) feature through the MLP; T*P tokens, frame-major.
RecordedOutput mlp_baseline_forward(Tape& tape, const FeatureVideo& video, OutMlpParams& mlp);
/// One Q-Former over all T*P features flattened frame-major; L tokens.
RecordedOutput pr_baseline_forward(Tape& tape, const FeatureVideo& video, ResamplerParams& params,
                                   PeMode pe);
/// Per-patch means over frames (P tokens) then per-frame means over patches
/// (T tokens), through the MLP; P + T tokens.
RecordedOutput meanpool_baseline_forward(Tape& tape, const FeatureVideo& video,
                                         OutMlpParams& mlp);

/// Type-erased projector of any kind, as used by training and the CLI.
class Projector {
 public:
  static Projector create(ProjectorKind kind, const EspressoConfig& cfg);

  ProjectorKind kind() const noexcept { return kind_; }
  const EspressoConfig& config() const noexcept { return cfg_; }

  RecordedOutput forward(Tape& tape, const FeatureVideo& video);
  ProjectorOutput forward(const FeatureVideo& video);

  /// Output length for a T x P input.
  std::size_t output_length(std::size_t frames, std::size_t patches) const;

  /// Stable order. Parameters live on the heap, so the pointers survive
  /// moves of the Projector itself.
  std::vector<Parameter*> parameters();

 private:
  using Params = std::variant<EspressoParams, OutMlpParams, ResamplerParams>;
  Projector(ProjectorKind kind, EspressoConfig cfg, Params params)
      : kind_(kind), cfg_(cfg), params_(std::make_unique<Params>(std::move(params))) {}

  ProjectorKind kind_;
  EspressoConfig cfg_;
  std::unique_ptr<Params> params_;
};

}  // namespace espresso
