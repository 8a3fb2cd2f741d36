#pragma once

#include <cstddef>
#include <span>

#include "espresso/tensor/kernels.hpp"
#include "espresso/tensor/tape.hpp"

// Differentiable wrappers over the forward kernels. Each call evaluates the
// kernel eagerly and records its analytic backward on the operands' tape.
namespace espresso {

Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);

/// dA = dC B^T, dB = A^T dC; batched semantics follow kernels::matmul.
Var matmul(Var a, Var b);
Var linear(Var x, Var weight, Var bias);

Var softmax_lastdim(Var x);
Var layer_norm(Var x, Var gain, Var bias, double eps = kernels::kLayerNormEps);
Var gelu(Var x);

Var concat_axis(std::span<const Var> parts, std::size_t axis);
Var slice_axis(Var x, std::size_t axis, std::size_t begin, std::size_t end);
Var permute(Var x, std::span<const std::size_t> perm);
Var reshape(Var x, Shape shape);
Var mean_axis(Var x, std::size_t axis);
Var sum(Var x);

/// Repeats x along a new leading axis of extent `count`.
Var broadcast_leading(Var x, std::size_t count);

}  // namespace espresso
