#include "espresso/synthbench/prng.hpp"

#include <cmath>
#include <numbers>

namespace espresso {

double Prng::uniform() noexcept {
  return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
}

double Prng::normal() noexcept {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Prng::index_below(std::size_t n) noexcept {
  return static_cast<std::size_t>(next() % static_cast<std::uint64_t>(n));
}

}  // namespace espresso
