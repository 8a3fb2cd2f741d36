#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>

#include "espresso/tensor/tape.hpp"

namespace espresso {

// Text format, one parameter per line: name, rank, extents, then every value
// in shortest round-trip decimal form. Loading restores values bit-exactly.
void save_checkpoint(std::ostream& out, std::span<Parameter* const> params);
/// Names, order and shapes must match `params`; throws std::runtime_error
/// otherwise.
void load_checkpoint(std::istream& in, std::span<Parameter* const> params);

void save_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params);
void load_checkpoint(const std::filesystem::path& path, std::span<Parameter* const> params);

}  // namespace espresso
