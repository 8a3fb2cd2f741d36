#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "espresso/costmodel/runtime.hpp"
#include "espresso/projectors/config.hpp"

namespace espresso {

struct ProjectorDescriptor {
  ProjectorKind kind = ProjectorKind::espresso;
  EspressoConfig config;
};

/// LLM input length: espresso n(p+t), mlp T*P, pr L, meanpool T+P.
/// Throws std::invalid_argument for T or P of zero, and for T < n (espresso).
std::uint64_t token_count(const ProjectorDescriptor& d, std::size_t frames, std::size_t patches);

/// Exact number of scalars held by the projector's parameter tensors.
std::uint64_t param_count(const ProjectorDescriptor& d);

/// Multiply-accumulates of every matmul in one forward pass over a T x P
/// input. Softmax, normalisation and elementwise work are not counted.
std::uint64_t flop_estimate(const ProjectorDescriptor& d, std::size_t frames, std::size_t patches);

/// MACs of a Q-Former stack: `batch` independent inputs, `queries` learnable
/// queries attending over `keys` tokens.
std::uint64_t qformer_macs(const EspressoConfig& cfg, std::size_t batch, std::size_t queries,
                           std::size_t keys);
std::uint64_t qformer_param_count(const EspressoConfig& cfg, std::size_t queries);

struct CostRow {
  ProjectorKind kind = ProjectorKind::espresso;
  std::size_t frames = 0;
  std::size_t patches = 0;
  std::uint64_t llm_input_tokens = 0;
  std::uint64_t projector_params = 0;
  std::uint64_t projector_macs = 0;
  std::optional<RuntimeReport> runtime;
};

struct ScalingOptions {
  bool measure = false;
  std::size_t warmups = 2;
  std::size_t runs = 10;
};

/// One row per (descriptor, frame count), descriptors in the given order.
std::vector<CostRow> scaling_report(std::span<const ProjectorDescriptor> kinds,
                                    std::span<const std::size_t> frames, std::size_t patches,
                                    const ScalingOptions& options = {});

}  // namespace espresso
