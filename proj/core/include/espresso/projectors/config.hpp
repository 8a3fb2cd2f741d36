#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "espresso/attention/qformer.hpp"

namespace espresso {

enum class ProjectorKind { espresso, mlp, pr, meanpool };

ProjectorKind parse_projector_kind(const std::string& text);
std::string to_string(ProjectorKind kind);

/// Invalid configuration value. `key()` names the offending field using the
/// same spelling as the command-line flags.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Architecture hyperparameters shared by every projector kind. Fields that
/// a kind does not use are ignored by it.
struct EspressoConfig {
  std::size_t feature_width = 16;    // D_v
  std::size_t llm_width = 32;        // D_llm
  std::size_t spatial_queries = 4;   // p
  std::size_t temporal_queries = 4;  // t
  std::size_t segments = 1;          // n
  std::size_t resampler_queries = 8; // L, PR baseline only
  std::size_t heads = 4;
  std::size_t blocks = 2;
  std::size_t ffn_mult = 4;
  PeMode pe = PeMode::sinusoidal;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  QFormerShape qformer_shape(std::size_t queries) const {
    return QFormerShape{queries, feature_width, heads, blocks, ffn_mult};
  }
};

}  // namespace espresso
