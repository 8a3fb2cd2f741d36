#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "espresso/tensor/tensor.hpp"

/// Forward tensor kernels. All functions are pure: they read their inputs and
/// return fresh tensors, so they may be called concurrently.
namespace espresso::kernels {

inline constexpr double kLayerNormEps = 1e-5;

/// Counts multiply-accumulates performed by `matmul` (and therefore `linear`)
/// on the current thread while in scope. Counters nest; only the innermost
/// one is charged.
class MacCounter {
 public:
  MacCounter();
  ~MacCounter();
  MacCounter(const MacCounter&) = delete;
  MacCounter& operator=(const MacCounter&) = delete;

  std::uint64_t count() const noexcept { return count_; }
  void add(std::uint64_t macs) noexcept { count_ += macs; }

 private:
  std::uint64_t count_ = 0;
  MacCounter* previous_ = nullptr;
};

/// c (+)= op(a) * op(b) on raw row-major blocks, op = transpose when flagged.
/// a is m x k after op, b is k x r after op, c is m x r. Not counted.
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t r, bool transpose_a, bool transpose_b, bool accumulate);

/// [..., m, k] x [k, r] -> [..., m, r], or batched [..., m, k] x [..., k, r]
/// with identical leading extents.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Number of independent (m x k)(k x r) products and their extents.
struct MatmulGeometry {
  std::size_t batch = 1;
  std::size_t m = 0;
  std::size_t k = 0;
  std::size_t r = 0;
  bool shared_rhs = false;
};
MatmulGeometry matmul_geometry(const Shape& a, const Shape& b);

Tensor softmax_lastdim(const Tensor& x);

struct LayerNormResult {
  Tensor output;
  Tensor normalized;   // (x - mean) * rstd
  Tensor inv_std;      // one entry per last-axis slice
};
LayerNormResult layer_norm_full(const Tensor& x, const Tensor& gain, const Tensor& bias,
                                double eps = kLayerNormEps);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = kLayerNormEps);

double gelu(double x);
double gelu_derivative(double x);
Tensor gelu(const Tensor& x);

/// x W + b broadcast over every leading axis of x.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor concat_axis(std::span<const Tensor> parts, std::size_t axis);
Tensor slice_axis(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);

/// out.shape[i] = x.shape[perm[i]].
Tensor permute(const Tensor& x, std::span<const std::size_t> perm);

Tensor mean_axis(const Tensor& x, std::size_t axis);

}  // namespace espresso::kernels
