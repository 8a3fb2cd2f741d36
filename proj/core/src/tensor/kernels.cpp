#include "espresso/tensor/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace espresso::kernels {

namespace {

thread_local MacCounter* active_counter = nullptr;

std::size_t product(const Shape& shape, std::size_t begin, std::size_t end) {
  std::size_t out = 1;
  for (std::size_t i = begin; i < end; ++i) out *= shape[i];
  return out;
}

}  // namespace

MacCounter::MacCounter() : previous_(active_counter) { active_counter = this; }
MacCounter::~MacCounter() { active_counter = previous_; }

namespace {
void charge(std::uint64_t macs) {
  if (active_counter != nullptr) active_counter->add(macs);
}
}  // namespace

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t r, bool transpose_a, bool transpose_b, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * r, 0.0);
  if (!transpose_a && !transpose_b) {
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = c + i * r;
      for (std::size_t l = 0; l < k; ++l) {
        const double ail = a[i * k + l];
        const double* brow = b + l * r;
        for (std::size_t j = 0; j < r; ++j) crow[j] += ail * brow[j];
      }
    }
  } else if (!transpose_a && transpose_b) {
    // b is stored r x k
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = a + i * k;
      for (std::size_t j = 0; j < r; ++j) {
        const double* brow = b + j * k;
        double acc = 0.0;
        for (std::size_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
        c[i * r + j] += acc;
      }
    }
  } else if (transpose_a && !transpose_b) {
    // a is stored k x m
    for (std::size_t l = 0; l < k; ++l) {
      const double* arow = a + l * m;
      const double* brow = b + l * r;
      for (std::size_t i = 0; i < m; ++i) {
        const double ali = arow[i];
        double* crow = c + i * r;
        for (std::size_t j = 0; j < r; ++j) crow[j] += ali * brow[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        double acc = 0.0;
        for (std::size_t l = 0; l < k; ++l) acc += a[l * m + i] * b[j * k + l];
        c[i * r + j] += acc;
      }
    }
  }
}

MatmulGeometry matmul_geometry(const Shape& a, const Shape& b) {
  auto mismatch = [&] {
    return ShapeError("matmul shape mismatch: " + to_string(a) + " x " + to_string(b));
  };
  if (a.size() < 2 || b.size() < 2) throw mismatch();
  MatmulGeometry g;
  g.m = a[a.size() - 2];
  g.k = a[a.size() - 1];
  if (b[b.size() - 2] != g.k) throw mismatch();
  g.r = b[b.size() - 1];
  g.batch = product(a, 0, a.size() - 2);
  if (b.size() == 2) {
    g.shared_rhs = true;
  } else {
    if (b.size() != a.size() || !std::equal(a.begin(), a.end() - 2, b.begin())) throw mismatch();
  }
  return g;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto g = matmul_geometry(a.shape(), b.shape());
  Shape out_shape(a.shape().begin(), a.shape().end() - 2);
  out_shape.push_back(g.m);
  out_shape.push_back(g.r);
  Tensor out(std::move(out_shape));
  if (g.shared_rhs) {
    // leading axes fold into rows
    gemm(a.raw(), b.raw(), out.raw(), g.batch * g.m, g.k, g.r, false, false, false);
  } else {
    for (std::size_t s = 0; s < g.batch; ++s) {
      gemm(a.raw() + s * g.m * g.k, b.raw() + s * g.k * g.r, out.raw() + s * g.m * g.r, g.m, g.k,
           g.r, false, false, false);
    }
  }
  charge(static_cast<std::uint64_t>(g.batch) * g.m * g.k * g.r);
  return out;
}

Tensor softmax_lastdim(const Tensor& x) {
  Tensor out = x;
  const std::size_t width = x.shape().back();
  const std::size_t rows = x.size() / width;
  for (std::size_t row = 0; row < rows; ++row) {
    double* v = out.raw() + row * width;
    const double peak = *std::max_element(v, v + width);
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      v[j] = std::exp(v[j] - peak);
      total += v[j];
    }
    for (std::size_t j = 0; j < width; ++j) v[j] /= total;
  }
  return out;
}

LayerNormResult layer_norm_full(const Tensor& x, const Tensor& gain, const Tensor& bias,
                                double eps) {
  const std::size_t width = x.shape().back();
  if (gain.size() != width || bias.size() != width) {
    throw ShapeError("layer_norm expects gain/bias of width " + std::to_string(width) + ", got " +
                     to_string(gain.shape()) + " and " + to_string(bias.shape()));
  }
  if (!(eps > 0.0)) throw std::invalid_argument("layer_norm eps must be positive");
  const std::size_t rows = x.size() / width;
  LayerNormResult result{Tensor(x.shape()), Tensor(x.shape()), Tensor({rows})};
  for (std::size_t row = 0; row < rows; ++row) {
    const double* in = x.raw() + row * width;
    double mean = 0.0;
    for (std::size_t j = 0; j < width; ++j) mean += in[j];
    mean /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t j = 0; j < width; ++j) var += (in[j] - mean) * (in[j] - mean);
    var /= static_cast<double>(width);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    result.inv_std[row] = inv_std;
    double* norm = result.normalized.raw() + row * width;
    double* out = result.output.raw() + row * width;
    for (std::size_t j = 0; j < width; ++j) {
      norm[j] = (in[j] - mean) * inv_std;
      out[j] = norm[j] * gain[j] + bias[j];
    }
  }
  return result;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  return layer_norm_full(x, gain, bias, eps).output;
}

namespace {
constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;
}  // namespace

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluScale * (x + kGeluCubic * x * x * x)));
}

double gelu_derivative(double x) {
  const double inner = kGeluScale * (x + kGeluCubic * x * x * x);
  const double th = std::tanh(inner);
  const double dinner = kGeluScale * (1.0 + 3.0 * kGeluCubic * x * x);
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * dinner;
}

Tensor gelu(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.data()) v = gelu(v);
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || x.shape().back() != weight.dim(0) || bias.size() != weight.dim(1)) {
    throw ShapeError("linear shape mismatch: x " + to_string(x.shape()) + ", W " +
                     to_string(weight.shape()) + ", b " + to_string(bias.shape()));
  }
  const std::size_t din = weight.dim(0);
  const std::size_t dout = weight.dim(1);
  Shape out_shape = x.shape();
  out_shape.back() = dout;
  Tensor out(std::move(out_shape));
  const std::size_t rows = x.size() / din;
  for (std::size_t row = 0; row < rows; ++row) {
    std::copy(bias.raw(), bias.raw() + dout, out.raw() + row * dout);
  }
  gemm(x.raw(), weight.raw(), out.raw(), rows, din, dout, false, false, true);
  charge(static_cast<std::uint64_t>(rows) * din * dout);
  return out;
}

Tensor concat_axis(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat_axis needs at least one part");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ShapeError("concat axis out of range for " + to_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& part : parts) {
    const Shape& s = part.shape();
    bool compatible = s.size() == first.size();
    for (std::size_t i = 0; compatible && i < s.size(); ++i) {
      if (i != axis && s[i] != first[i]) compatible = false;
    }
    if (!compatible) {
      throw ShapeError("concat_axis mismatch: " + to_string(first) + " vs " + to_string(s) +
                       " along axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
  }
  const std::size_t outer = product(first, 0, axis);
  const std::size_t inner = product(first, axis + 1, first.size());
  Tensor out(out_shape);
  double* dst = out.raw();
  for (std::size_t o = 0; o < outer; ++o) {
    for (const auto& part : parts) {
      const std::size_t chunk = part.dim(axis) * inner;
      const double* src = part.raw() + o * chunk;
      dst = std::copy(src, src + chunk, dst);
    }
  }
  return out;
}

Tensor slice_axis(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  if (axis >= x.rank() || begin >= end || end > x.dim(axis)) {
    throw ShapeError("invalid slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") on axis " + std::to_string(axis) + " of " + to_string(x.shape()));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const std::size_t outer = product(x.shape(), 0, axis);
  const std::size_t inner = product(x.shape(), axis + 1, x.rank());
  Tensor out(std::move(out_shape));
  double* dst = out.raw();
  for (std::size_t o = 0; o < outer; ++o) {
    const double* src = x.raw() + (o * x.dim(axis) + begin) * inner;
    dst = std::copy(src, src + (end - begin) * inner, dst);
  }
  return out;
}

Tensor permute(const Tensor& x, std::span<const std::size_t> perm) {
  const std::size_t rank = x.rank();
  if (perm.size() != rank) throw ShapeError("permutation rank mismatch for " + to_string(x.shape()));
  std::vector<bool> seen(rank, false);
  for (auto p : perm) {
    if (p >= rank || seen[p]) throw ShapeError("invalid axis permutation");
    seen[p] = true;
  }
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank - 1; i > 0; --i) in_strides[i - 1] = in_strides[i] * x.dim(i);
  Shape out_shape(rank);
  std::vector<std::size_t> strides(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = x.dim(perm[i]);
    strides[i] = in_strides[perm[i]];
  }
  Tensor out(out_shape);
  std::vector<std::size_t> index(rank, 0);
  std::size_t src = 0;
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out[flat] = x[src];
    for (std::size_t axis = rank; axis-- > 0;) {
      if (++index[axis] < out_shape[axis]) {
        src += strides[axis];
        break;
      }
      src -= strides[axis] * (out_shape[axis] - 1);
      index[axis] = 0;
    }
  }
  return out;
}

Tensor mean_axis(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) throw ShapeError("mean axis out of range for " + to_string(x.shape()));
  Shape out_shape;
  for (std::size_t i = 0; i < x.rank(); ++i) {
    if (i != axis) out_shape.push_back(x.dim(i));
  }
  if (out_shape.empty()) out_shape.push_back(1);
  const std::size_t outer = product(x.shape(), 0, axis);
  const std::size_t count = x.dim(axis);
  const std::size_t inner = product(x.shape(), axis + 1, x.rank());
  Tensor out(std::move(out_shape));
  // Running mean: exact when every slice along `axis` is identical.
  for (std::size_t o = 0; o < outer; ++o) {
    double* dst = out.raw() + o * inner;
    for (std::size_t a = 0; a < count; ++a) {
      const double* src = x.raw() + (o * count + a) * inner;
      const double weight = 1.0 / static_cast<double>(a + 1);
      for (std::size_t i = 0; i < inner; ++i) dst[i] += (src[i] - dst[i]) * weight;
    }
  }
  return out;
}

}  // namespace espresso::kernels
