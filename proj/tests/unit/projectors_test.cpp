#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "espresso/projectors/projectors.hpp"
#include "espresso/tensor/gradcheck.hpp"
#include "espresso/tensor/kernels.hpp"
#include "espresso/tensor/ops.hpp"
#include "support/oracles.hpp"

namespace espresso {
namespace {

using testing::random_permutation;
using testing::random_tensor;

FeatureVideo random_video(std::size_t frames, std::size_t patches, std::size_t width,
                          std::uint64_t seed) {
  return FeatureVideo(random_tensor({frames, patches, width}, seed));
}

// Every frame is the same [P x D] map.
FeatureVideo constant_video(const Tensor& frame, std::size_t frames) {
  Tensor t({frames, frame.dim(0), frame.dim(1)});
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t i = 0; i < frame.size(); ++i) t[f * frame.size() + i] = frame[i];
  }
  return FeatureVideo(std::move(t));
}

EspressoConfig small_config() {
  EspressoConfig cfg;
  cfg.feature_width = 8;
  cfg.llm_width = 8;
  cfg.heads = 2;
  return cfg;
}

// Reorders frames of [T x P x D] by `perm`, or patches when `axis` is 1.
Tensor permute_axis(const Tensor& x, std::size_t axis, const std::vector<std::size_t>& perm) {
  std::vector<Tensor> parts;
  for (std::size_t i : perm) parts.push_back(kernels::slice_axis(x, axis, i, i + 1));
  return kernels::concat_axis(parts, axis);
}

Tensor run(Var (*op)(Var, QFormerParams&, PeMode), const Tensor& x, QFormerParams& params,
           PeMode pe) {
  Tape tape;
  return op(tape.constant(x), params, pe).value();
}

TEST(Segments, Examples) {
  const auto eight = segment_bounds(128, 8);
  ASSERT_EQ(eight.size(), 8u);
  for (std::size_t s = 0; s < 8; ++s) EXPECT_EQ(eight[s].second - eight[s].first, 16u);

  const FeatureVideo v = random_video(7, 2, 4, 1);
  const auto one = split_segments(v, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], v);

  std::vector<std::size_t> sizes;
  for (auto [b, e] : segment_bounds(10, 4)) sizes.push_back(e - b);
  EXPECT_EQ(sizes, (std::vector<std::size_t>{2, 3, 2, 3}));

  EXPECT_THROW(segment_bounds(3, 4), std::invalid_argument);
  EXPECT_THROW(segment_bounds(3, 0), std::invalid_argument);
}

TEST(Segments, PartitionProperty) {
  for (std::size_t frames = 1; frames <= 40; ++frames) {
    for (std::size_t n = 1; n <= frames; ++n) {
      const auto bounds = segment_bounds(frames, n);
      std::size_t lo = frames;
      std::size_t hi = 0;
      std::size_t cursor = 0;
      for (auto [b, e] : bounds) {
        EXPECT_EQ(b, cursor);
        lo = std::min(lo, e - b);
        hi = std::max(hi, e - b);
        cursor = e;
      }
      EXPECT_EQ(cursor, frames);
      EXPECT_LE(hi - lo, 1u);
    }
  }
  const FeatureVideo v = random_video(11, 3, 4, 2);
  std::vector<Tensor> parts;
  for (const auto& seg : split_segments(v, 3)) parts.push_back(seg.features());
  EXPECT_EQ(kernels::concat_axis(parts, 0), v.features());
}

class PoolerTest : public ::testing::Test {
 protected:
  EspressoConfig cfg = small_config();
  EspressoParams params = param_init(cfg, 5);
};

TEST_F(PoolerTest, TemporalPoolIdenticalFramesIgnoreLength) {
  const Tensor frame = random_tensor({3, 8}, 1);
  const Tensor one = run(temporal_pool, constant_video(frame, 1).features(),
                         params.temporal_pooler, PeMode::disabled);
  const Tensor sixteen = run(temporal_pool, constant_video(frame, 16).features(),
                             params.temporal_pooler, PeMode::disabled);
  EXPECT_EQ(one.shape(), (Shape{3, 8}));
  EXPECT_LE(max_relative_difference(sixteen, one), 1e-12);
}

TEST_F(PoolerTest, TemporalPoolRowsArePerLocation) {
  const Tensor seg = random_tensor({5, 3, 8}, 2);
  const Tensor out = run(temporal_pool, seg, params.temporal_pooler, PeMode::sinusoidal);
  for (std::size_t loc = 0; loc < 3; ++loc) {
    Tape tape;
    const Tensor column = kernels::slice_axis(seg, 1, loc, loc + 1).reshaped({5, 8});
    const Tensor expected =
        qformer_forward(tape.constant(column), params.temporal_pooler, PeMode::sinusoidal).value();
    EXPECT_LE(max_relative_difference(kernels::slice_axis(out, 0, loc, loc + 1), expected),
              1e-12);
  }
}

TEST_F(PoolerTest, TemporalPoolFrameReversalWithoutEncoding) {
  const Tensor seg = random_tensor({6, 3, 8}, 3);
  const Tensor reversed = permute_axis(seg, 0, {5, 4, 3, 2, 1, 0});
  EXPECT_LE(max_relative_difference(
                run(temporal_pool, reversed, params.temporal_pooler, PeMode::disabled),
                run(temporal_pool, seg, params.temporal_pooler, PeMode::disabled)),
            1e-6);
}

TEST_F(PoolerTest, SpatialPoolSinglePatchIsSingleKeyQFormer) {
  const Tensor seg = random_tensor({4, 1, 8}, 4);
  const Tensor out = run(spatial_pool, seg, params.spatial_pooler, PeMode::sinusoidal);
  ASSERT_EQ(out.shape(), (Shape{4, 8}));
  for (std::size_t f = 0; f < 4; ++f) {
    Tape tape;
    const Tensor patch = kernels::slice_axis(seg, 0, f, f + 1).reshaped({1, 8});
    const Tensor expected =
        qformer_forward(tape.constant(patch), params.spatial_pooler, PeMode::sinusoidal).value();
    EXPECT_LE(max_relative_difference(kernels::slice_axis(out, 0, f, f + 1), expected), 1e-12);
  }
}

TEST_F(PoolerTest, SpatialPoolPatchPermutationWithoutEncoding) {
  const Tensor seg = random_tensor({3, 7, 8}, 5);
  const Tensor permuted = permute_axis(seg, 1, random_permutation(7, 9));
  for (std::size_t patches : {1u, 7u, 20u}) {
    EXPECT_EQ(run(spatial_pool, random_tensor({3, patches, 8}, patches), params.spatial_pooler,
                  PeMode::sinusoidal)
                  .shape(),
              (Shape{3, 8}));
  }
  EXPECT_LE(max_relative_difference(
                run(spatial_pool, permuted, params.spatial_pooler, PeMode::disabled),
                run(spatial_pool, seg, params.spatial_pooler, PeMode::disabled)),
            1e-6);
}

TEST_F(PoolerTest, CompressorShapes) {
  EXPECT_EQ(run(spatial_compress, random_tensor({576, 8}, 1), params.spatial_compressor,
                PeMode::sinusoidal)
                .shape(),
            (Shape{4, 8}));
  EXPECT_EQ(run(spatial_compress, random_tensor({1, 8}, 2), params.spatial_compressor,
                PeMode::sinusoidal)
                .shape(),
            (Shape{4, 8}));
  EXPECT_EQ(run(temporal_compress, random_tensor({16, 8}, 3), params.temporal_compressor,
                PeMode::sinusoidal)
                .shape(),
            (Shape{4, 8}));

  EspressoConfig wide = cfg;
  wide.temporal_queries = 8;
  auto eight = param_init(wide, 5);
  EXPECT_EQ(run(temporal_compress, random_tensor({128, 8}, 4), eight.temporal_compressor,
                PeMode::sinusoidal)
                .shape(),
            (Shape{8, 8}));
}

TEST_F(PoolerTest, CompressorsCollapseIdenticalRows) {
  const Tensor row = random_tensor({1, 8}, 6);
  auto repeated = [&](std::size_t count) {
    std::vector<Tensor> rows(count, row);
    return kernels::concat_axis(rows, 0);
  };
  const Tensor base_s = run(spatial_compress, repeated(1), params.spatial_compressor,
                            PeMode::disabled);
  const Tensor base_t = run(temporal_compress, repeated(1), params.temporal_compressor,
                            PeMode::disabled);
  for (std::size_t count : {3u, 50u}) {
    EXPECT_LE(max_relative_difference(run(spatial_compress, repeated(count),
                                          params.spatial_compressor, PeMode::disabled),
                                      base_s),
              1e-12);
    EXPECT_LE(max_relative_difference(run(temporal_compress, repeated(count),
                                          params.temporal_compressor, PeMode::disabled),
                                      base_t),
              1e-12);
  }
}

TEST(ParamInit, DeterministicAndSeedSensitive) {
  const EspressoConfig cfg = small_config();
  auto a = param_init(cfg, 1);
  auto b = param_init(cfg, 1);
  auto c = param_init(cfg, 2);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  const auto pc = c.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->name, pb[i]->name);
    EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
    any_differs = any_differs || !(pa[i]->value == pc[i]->value);
    if (pa[i]->name.find(".gain") != std::string::npos) {
      for (double v : pa[i]->value.data()) EXPECT_EQ(v, 1.0);
    }
  }
  EXPECT_TRUE(any_differs);
}

TEST(Config, ValidationNamesField) {
  auto expect_key = [](EspressoConfig cfg, const std::string& key) {
    try {
      cfg.validate();
      FAIL() << "expected ConfigError for " << key;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.key(), key);
    }
  };
  EspressoConfig cfg;
  cfg.spatial_queries = 0;
  expect_key(cfg, "p");
  cfg = {};
  cfg.temporal_queries = 0;
  expect_key(cfg, "t");
  cfg = {};
  cfg.segments = 0;
  expect_key(cfg, "n");
  cfg = {};
  cfg.feature_width = 15;
  expect_key(cfg, "dv");
  cfg = {};
  cfg.llm_width = 7;
  expect_key(cfg, "dllm");
  EXPECT_NO_THROW(EspressoConfig{}.validate());
  EXPECT_THROW(parse_projector_kind("stc"), ConfigError);
  for (auto kind : {ProjectorKind::espresso, ProjectorKind::mlp, ProjectorKind::pr,
                    ProjectorKind::meanpool}) {
    EXPECT_EQ(parse_projector_kind(to_string(kind)), kind);
  }
}

class EspressoForwardTest : public ::testing::Test {
 protected:
  ProjectorOutput forward(const FeatureVideo& v) { return espresso_forward(v, params, cfg); }

  EspressoConfig cfg = small_config();
  EspressoParams params = param_init(cfg, 9);
};

TEST_F(EspressoForwardTest, SingleSegmentLength) {
  const auto out = forward(random_video(16, 4, 8, 1));
  EXPECT_EQ(out.tokens.shape(), (Shape{8, 8}));
  ASSERT_EQ(out.provenance.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(out.provenance[i].segment, 0u);
    EXPECT_EQ(out.provenance[i].path, i < 4 ? TokenPath::spatial : TokenPath::temporal);
  }
}

TEST_F(EspressoForwardTest, FullScaleConfigurationYieldsSixtyFourTokens) {
  cfg.segments = 8;
  const auto out = forward(random_video(128, 576, 8, 2));
  EXPECT_EQ(out.length(), 64u);
  for (std::size_t s = 0; s < 8; ++s) {
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_EQ(out.provenance[s * 8 + i],
                (TokenOrigin{s, i < 4 ? TokenPath::spatial : TokenPath::temporal}));
    }
  }
}

TEST_F(EspressoForwardTest, FixedLengthGrid) {
  cfg.segments = 2;
  cfg.spatial_queries = 3;
  cfg.temporal_queries = 2;
  params = param_init(cfg, 9);
  for (std::size_t frames : {2u, 5u, 9u}) {
    for (std::size_t patches : {1u, 4u, 13u}) {
      EXPECT_EQ(forward(random_video(frames, patches, 8, frames * patches)).length(), 10u);
    }
  }
  EXPECT_THROW(forward(random_video(1, 4, 8, 3)), std::invalid_argument);
  EXPECT_THROW(forward(random_video(4, 4, 6, 3)), ShapeError);
}

TEST_F(EspressoForwardTest, FramePermutationWithinSegmentWithoutEncoding) {
  cfg.pe = PeMode::disabled;
  cfg.segments = 2;
  const FeatureVideo v = random_video(8, 3, 8, 4);
  // Shuffle frames of the second segment only.
  const Tensor shuffled = permute_axis(v.features(), 0, {0, 1, 2, 3, 6, 4, 7, 5});
  EXPECT_LE(max_relative_difference(forward(FeatureVideo(shuffled)).tokens, forward(v).tokens),
            1e-6);
}

TEST_F(EspressoForwardTest, SegmentLocality) {
  cfg.segments = 4;
  const FeatureVideo v = random_video(10, 3, 8, 5);
  const auto base = forward(v);
  const auto bounds = segment_bounds(10, 4);
  for (std::size_t s = 0; s < 4; ++s) {
    FeatureVideo perturbed = v;
    const std::size_t frame = bounds[s].first;
    perturbed.features().at({frame, 1, 2}) += 0.5;
    const auto out = forward(perturbed);
    for (std::size_t tok = 0; tok < out.length(); ++tok) {
      const Tensor a = kernels::slice_axis(out.tokens, 0, tok, tok + 1);
      const Tensor b = kernels::slice_axis(base.tokens, 0, tok, tok + 1);
      if (out.provenance[tok].segment == s) {
        EXPECT_FALSE(a == b) << "segment " << s << " token " << tok;
      } else {
        EXPECT_TRUE(a == b) << "segment " << s << " token " << tok;
      }
    }
  }
}

TEST_F(EspressoForwardTest, Deterministic) {
  const FeatureVideo v = random_video(6, 5, 8, 6);
  auto other = param_init(cfg, 9);
  EXPECT_EQ(forward(v), espresso_forward(v, other, cfg));
}

TEST_F(EspressoForwardTest, GradientCheckCoversEveryGroup) {
  cfg.segments = 2;
  cfg.blocks = 1;
  cfg.spatial_queries = 2;
  cfg.temporal_queries = 2;
  params = param_init(cfg, 9);
  // Larger weights keep every path's contribution well above difference noise.
  for (Parameter* p : params.parameters()) {
    if (p->name.find(".gain") == std::string::npos) {
      p->value = random_tensor(p->value.shape(), p->name.size() * 31 + p->value.size(), 0.3);
    }
  }
  const FeatureVideo v = random_video(4, 3, 8, 7);
  const Tensor weights = random_tensor({8, 8}, 8);
  const auto result = finite_diff_grad_check(
      [&](Tape& tape) {
        Var tokens = espresso_forward(tape, v, params, cfg).tokens;
        return sum(mul(tokens, tape.constant(weights)));
      },
      params.parameters(), 1e-5);
  EXPECT_LE(result.max_relative_error, 1e-4) << result.worst_parameter;

  Tape tape;
  Var tokens = espresso_forward(tape, v, params, cfg).tokens;
  tape.backward(sum(mul(tokens, tape.constant(weights))));
  for (const char* queries : {"temporal_pooler.queries", "spatial_pooler.queries",
                              "spatial_compressor.queries", "temporal_compressor.queries"}) {
    bool found = false;
    for (Parameter* p : params.parameters()) {
      if (p->name == queries) {
        found = true;
        double norm = 0.0;
        for (double g : tape.gradient(*p).data()) norm += g * g;
        EXPECT_GT(norm, 0.0) << queries;
      }
    }
    EXPECT_TRUE(found) << queries;
  }
}

TEST(MlpBaseline, TokenCountAndLocality) {
  EspressoConfig cfg = small_config();
  auto mlp = mlp_baseline_init(cfg, 1);
  Tape big;
  EXPECT_EQ(mlp_baseline_forward(big, random_video(8, 576, 8, 1), mlp).tokens.shape(),
            (Shape{4608, 8}));
  Tape tiny;
  EXPECT_EQ(mlp_baseline_forward(tiny, random_video(1, 1, 8, 2), mlp).tokens.shape(),
            (Shape{1, 8}));

  const FeatureVideo v = random_video(3, 4, 8, 3);
  FeatureVideo perturbed = v;
  perturbed.features().at({1, 2, 5}) += 1.0;
  Tape t1;
  Tape t2;
  const Tensor a = mlp_baseline_forward(t1, v, mlp).tokens.value();
  const Tensor b = mlp_baseline_forward(t2, perturbed, mlp).tokens.value();
  std::size_t changed = 0;
  for (std::size_t tok = 0; tok < 12; ++tok) {
    if (!(kernels::slice_axis(a, 0, tok, tok + 1) == kernels::slice_axis(b, 0, tok, tok + 1))) {
      ++changed;
      EXPECT_EQ(tok, 1u * 4 + 2);  // frame-major, patch-minor
    }
  }
  EXPECT_EQ(changed, 1u);
}

TEST(PrBaseline, InputSizeIndependentLength) {
  EspressoConfig cfg = small_config();
  auto params = pr_baseline_init(cfg, 1);
  Tape t1;
  EXPECT_EQ(pr_baseline_forward(t1, random_video(8, 16, 8, 1), params, PeMode::sinusoidal)
                .tokens.shape(),
            (Shape{8, 8}));
  Tape t2;
  EXPECT_EQ(pr_baseline_forward(t2, random_video(128, 576, 8, 2), params, PeMode::sinusoidal)
                .tokens.shape(),
            (Shape{8, 8}));
}

TEST(PrBaseline, FlattenedPermutationWithoutEncoding) {
  EspressoConfig cfg = small_config();
  auto params = pr_baseline_init(cfg, 1);
  const FeatureVideo v = random_video(4, 5, 8, 3);
  const Tensor flat = v.features().reshaped({20, 8});
  const Tensor shuffled = testing::permute_rows(flat, random_permutation(20, 4));
  Tape t1;
  Tape t2;
  const Tensor a = pr_baseline_forward(t1, v, params, PeMode::disabled).tokens.value();
  const Tensor b = pr_baseline_forward(t2, FeatureVideo(shuffled.reshaped({4, 5, 8})), params,
                                       PeMode::disabled)
                       .tokens.value();
  EXPECT_LE(max_relative_difference(b, a), 1e-6);
}

TEST(MeanpoolBaseline, MatchesNaiveMeans) {
  EspressoConfig cfg = small_config();
  auto mlp = meanpool_baseline_init(cfg, 1);
  const FeatureVideo v = random_video(5, 3, 8, 4);
  Tensor means({3 + 5, 8});
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t d = 0; d < 8; ++d) {
      double acc = 0.0;
      for (std::size_t f = 0; f < 5; ++f) acc += v.features().at({f, p, d});
      means.at({p, d}) = acc / 5.0;
    }
  }
  for (std::size_t f = 0; f < 5; ++f) {
    for (std::size_t d = 0; d < 8; ++d) {
      double acc = 0.0;
      for (std::size_t p = 0; p < 3; ++p) acc += v.features().at({f, p, d});
      means.at({3 + f, d}) = acc / 3.0;
    }
  }
  Tape tape;
  const auto out = meanpool_baseline_forward(tape, v, mlp);
  const Tensor expected = out_mlp_forward(tape.constant(means), mlp).value();
  EXPECT_LE(max_relative_difference(out.tokens.value(), expected), 1e-12);
  ASSERT_EQ(out.provenance.size(), 8u);
  EXPECT_EQ(out.provenance[2].path, TokenPath::spatial);
  EXPECT_EQ(out.provenance[3].path, TokenPath::temporal);
}

TEST(MeanpoolBaseline, IdenticalFramesGiveMlpOfRows) {
  EspressoConfig cfg = small_config();
  auto mlp = meanpool_baseline_init(cfg, 1);
  const Tensor frame = random_tensor({4, 8}, 5);
  Tape tape;
  const Tensor out =
      meanpool_baseline_forward(tape, constant_video(frame, 6), mlp).tokens.value();
  const Tensor expected = out_mlp_forward(tape.constant(frame), mlp).value();
  EXPECT_EQ(kernels::slice_axis(out, 0, 0, 4), expected);

  Tape big;
  EXPECT_EQ(meanpool_baseline_forward(big, random_video(16, 576, 8, 6), mlp).tokens.value().dim(0), 592u);
}

TEST(FeatureVideoIo, RoundTripAndRejection) {
  const FeatureVideo v = random_video(3, 2, 4, 1);
  std::stringstream buffer;
  write_feature_video(buffer, v);
  const std::string bytes = buffer.str();
  ASSERT_EQ(bytes.size(), 5u + 12u + 24u * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "ESPR");
  EXPECT_EQ(bytes[4], '\x01');
  EXPECT_EQ(bytes[5], '\x03');  // T, little-endian

  std::stringstream in(bytes);
  const FeatureVideo back = read_feature_video(in);
  Tensor expected = v.features();
  expected.round_to(Precision::f32);
  EXPECT_EQ(back.features(), expected);

  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  std::stringstream bad1(wrong_magic);
  EXPECT_THROW(read_feature_video(bad1), FormatError);

  std::string wrong_version = bytes;
  wrong_version[4] = '\x02';
  std::stringstream bad2(wrong_version);
  EXPECT_THROW(read_feature_video(bad2), FormatError);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_feature_video(truncated), FormatError);
}

TEST(ProjectorFacade, LengthsAgreeWithForward) {
  EspressoConfig cfg = small_config();
  cfg.segments = 2;
  const FeatureVideo v = random_video(6, 5, 8, 1);
  for (auto kind : {ProjectorKind::espresso, ProjectorKind::mlp, ProjectorKind::pr,
                    ProjectorKind::meanpool}) {
    Projector projector = Projector::create(kind, cfg);
    const auto out = projector.forward(v);
    EXPECT_EQ(out.length(), projector.output_length(6, 5)) << to_string(kind);
    EXPECT_EQ(out.tokens.dim(1), cfg.llm_width);
    EXPECT_EQ(out.provenance.size(), out.length());
  }
}

TEST(ProjectorFacade, ParameterAddressesSurviveMove) {
  Projector a = Projector::create(ProjectorKind::espresso, small_config());
  const auto before = a.parameters();
  Projector b = std::move(a);
  EXPECT_EQ(b.parameters(), before);
}

}  // namespace
}  // namespace espresso
