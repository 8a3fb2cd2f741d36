#pragma once

#include <cstddef>

#include "espresso/tensor/tape.hpp"

namespace espresso {

/// -log softmax(logits)[label] with max subtraction. `logits` holds M values
/// in any shape; gradient is softmax - onehot. Throws std::out_of_range when
/// label >= M.
Var cross_entropy(Var logits, std::size_t label);
double cross_entropy(const Tensor& logits, std::size_t label);

}  // namespace espresso
