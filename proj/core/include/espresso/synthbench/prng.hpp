#pragma once

#include <cstddef>
#include <cstdint>

namespace espresso {

/// splitmix64 generator. Streams depend only on the seed, so every consumer
/// that needs reproducibility owns its own instance.
class Prng {
 public:
  explicit Prng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw in (0, 1].
  double uniform() noexcept;
  /// Standard normal via Box-Muller; consumes exactly two draws.
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
  /// Uniform index in [0, n) by modular reduction of one draw; n must be > 0.
  std::size_t index_below(std::size_t n) noexcept;

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace espresso
