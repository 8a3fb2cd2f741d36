#include "espresso/tensor/ops.hpp"

#include <numeric>
#include <vector>

namespace espresso {

namespace {

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + " shape mismatch: " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    if (tape.requires_grad(a)) {
      Tensor& da = tape.grad_buffer(a);
      const Tensor& bv = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
    }
    if (tape.requires_grad(b)) {
      Tensor& db = tape.grad_buffer(b);
      const Tensor& av = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
    }
  });
}

Var scale(Var x, double factor) {
  Tensor out = x.value();
  for (auto& v : out.data()) v *= factor;
  return x.tape().record(std::move(out), {x}, [x, factor](Tape& tape, const Tensor& g) {
    Tensor& dx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * factor;
  });
}

Var matmul(Var a, Var b) {
  Tensor out = kernels::matmul(a.value(), b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    const auto geo = kernels::matmul_geometry(a.shape(), b.shape());
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (tape.requires_grad(a)) {
      Tensor& da = tape.grad_buffer(a);
      if (geo.shared_rhs) {
        kernels::gemm(g.raw(), bv.raw(), da.raw(), geo.batch * geo.m, geo.r, geo.k, false, true,
                      true);
      } else {
        for (std::size_t s = 0; s < geo.batch; ++s) {
          kernels::gemm(g.raw() + s * geo.m * geo.r, bv.raw() + s * geo.k * geo.r,
                        da.raw() + s * geo.m * geo.k, geo.m, geo.r, geo.k, false, true, true);
        }
      }
    }
    if (tape.requires_grad(b)) {
      Tensor& db = tape.grad_buffer(b);
      if (geo.shared_rhs) {
        kernels::gemm(av.raw(), g.raw(), db.raw(), geo.k, geo.batch * geo.m, geo.r, true, false,
                      true);
      } else {
        for (std::size_t s = 0; s < geo.batch; ++s) {
          kernels::gemm(av.raw() + s * geo.m * geo.k, g.raw() + s * geo.m * geo.r,
                        db.raw() + s * geo.k * geo.r, geo.k, geo.m, geo.r, true, false, true);
        }
      }
    }
  });
}

Var linear(Var x, Var weight, Var bias) {
  Tensor out = kernels::linear(x.value(), weight.value(), bias.value());
  return x.tape().record(std::move(out), {x, weight, bias}, [x, weight, bias](Tape& tape,
                                                                              const Tensor& g) {
    const Tensor& w = weight.value();
    const std::size_t din = w.dim(0);
    const std::size_t dout = w.dim(1);
    const std::size_t rows = g.size() / dout;
    if (tape.requires_grad(x)) {
      kernels::gemm(g.raw(), w.raw(), tape.grad_buffer(x).raw(), rows, dout, din, false, true,
                    true);
    }
    if (tape.requires_grad(weight)) {
      kernels::gemm(x.value().raw(), g.raw(), tape.grad_buffer(weight).raw(), din, rows, dout,
                    true, false, true);
    }
    if (tape.requires_grad(bias)) {
      Tensor& db = tape.grad_buffer(bias);
      for (std::size_t row = 0; row < rows; ++row) {
        for (std::size_t j = 0; j < dout; ++j) db[j] += g[row * dout + j];
      }
    }
  });
}

Var softmax_lastdim(Var x) {
  Tensor out = kernels::softmax_lastdim(x.value());
  Tensor probs = out;
  return x.tape().record(std::move(out), {x}, [x, probs = std::move(probs)](Tape& tape,
                                                                            const Tensor& g) {
    Tensor& dx = tape.grad_buffer(x);
    const std::size_t width = probs.shape().back();
    const std::size_t rows = probs.size() / width;
    for (std::size_t row = 0; row < rows; ++row) {
      const double* p = probs.raw() + row * width;
      const double* gp = g.raw() + row * width;
      double dot = 0.0;
      for (std::size_t j = 0; j < width; ++j) dot += gp[j] * p[j];
      double* d = dx.raw() + row * width;
      for (std::size_t j = 0; j < width; ++j) d[j] += p[j] * (gp[j] - dot);
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  auto result = kernels::layer_norm_full(x.value(), gain.value(), bias.value(), eps);
  Tensor normalized = std::move(result.normalized);
  Tensor inv_std = std::move(result.inv_std);
  return x.tape().record(
      std::move(result.output), {x, gain, bias},
      [x, gain, bias, normalized = std::move(normalized), inv_std = std::move(inv_std)](
          Tape& tape, const Tensor& g) {
        const Tensor& gv = gain.value();
        const std::size_t width = gv.size();
        const std::size_t rows = g.size() / width;
        if (tape.requires_grad(x)) {
          Tensor& dx = tape.grad_buffer(x);
          std::vector<double> dnorm(width);
          for (std::size_t row = 0; row < rows; ++row) {
            const double* gp = g.raw() + row * width;
            const double* xh = normalized.raw() + row * width;
            double sum_d = 0.0;
            double sum_dx = 0.0;
            for (std::size_t j = 0; j < width; ++j) {
              dnorm[j] = gp[j] * gv[j];
              sum_d += dnorm[j];
              sum_dx += dnorm[j] * xh[j];
            }
            const double n = static_cast<double>(width);
            const double rs = inv_std[row];
            double* d = dx.raw() + row * width;
            for (std::size_t j = 0; j < width; ++j) {
              d[j] += rs / n * (n * dnorm[j] - sum_d - xh[j] * sum_dx);
            }
          }
        }
        if (tape.requires_grad(gain) || tape.requires_grad(bias)) {
          Tensor dg(gv.shape());
          Tensor db(gv.shape());
          for (std::size_t row = 0; row < rows; ++row) {
            for (std::size_t j = 0; j < width; ++j) {
              dg[j] += g[row * width + j] * normalized[row * width + j];
              db[j] += g[row * width + j];
            }
          }
          tape.accumulate(gain, dg);
          tape.accumulate(bias, db);
        }
      });
}

Var gelu(Var x) {
  Tensor out = kernels::gelu(x.value());
  return x.tape().record(std::move(out), {x}, [x](Tape& tape, const Tensor& g) {
    const Tensor& xv = x.value();
    Tensor& dx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * kernels::gelu_derivative(xv[i]);
  });
}

Var concat_axis(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat_axis needs at least one part");
  std::vector<Tensor> values;
  values.reserve(parts.size());
  for (const Var& p : parts) values.push_back(p.value());
  Tensor out = kernels::concat_axis(values, axis);
  std::vector<Var> inputs(parts.begin(), parts.end());
  Tape& tape = parts.front().tape();
  return tape.record(std::move(out), inputs, [inputs, axis](Tape& tape, const Tensor& g) {
    std::size_t offset = 0;
    for (const Var& part : inputs) {
      const std::size_t extent = part.shape()[axis];
      if (tape.requires_grad(part)) {
        tape.accumulate(part, kernels::slice_axis(g, axis, offset, offset + extent));
      }
      offset += extent;
    }
  });
}

Var slice_axis(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  Tensor out = kernels::slice_axis(x.value(), axis, begin, end);
  return x.tape().record(std::move(out), {x}, [x, axis, begin, end](Tape& tape, const Tensor& g) {
    const Shape& shape = x.shape();
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
    Tensor& dx = tape.grad_buffer(x);
    const std::size_t chunk = (end - begin) * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      double* dst = dx.raw() + (o * shape[axis] + begin) * inner;
      const double* src = g.raw() + o * chunk;
      for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
    }
  });
}

Var permute(Var x, std::span<const std::size_t> perm) {
  Tensor out = kernels::permute(x.value(), perm);
  std::vector<std::size_t> inverse(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inverse[perm[i]] = i;
  return x.tape().record(std::move(out), {x}, [x, inverse](Tape& tape, const Tensor& g) {
    tape.accumulate(x, kernels::permute(g, inverse));
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record(std::move(out), {x}, [x](Tape& tape, const Tensor& g) {
    Tensor& dx = tape.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
  });
}

Var mean_axis(Var x, std::size_t axis) {
  Tensor out = kernels::mean_axis(x.value(), axis);
  return x.tape().record(std::move(out), {x}, [x, axis](Tape& tape, const Tensor& g) {
    const Shape& shape = x.shape();
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
    const std::size_t count = shape[axis];
    const double factor = 1.0 / static_cast<double>(count);
    Tensor& dx = tape.grad_buffer(x);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t a = 0; a < count; ++a) {
        double* dst = dx.raw() + (o * count + a) * inner;
        const double* src = g.raw() + o * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i] * factor;
      }
    }
  });
}

Var sum(Var x) {
  const auto values = x.value().data();
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  return x.tape().record(Tensor::scalar(total), {x}, [x](Tape& tape, const Tensor& g) {
    Tensor& dx = tape.grad_buffer(x);
    for (auto& v : dx.data()) v += g[0];
  });
}

Var broadcast_leading(Var x, std::size_t count) {
  if (count == 0) throw ShapeError("broadcast count must be positive");
  const Tensor& xv = x.value();
  Shape shape{count};
  shape.insert(shape.end(), xv.shape().begin(), xv.shape().end());
  Tensor out(std::move(shape));
  for (std::size_t c = 0; c < count; ++c) {
    std::copy(xv.raw(), xv.raw() + xv.size(), out.raw() + c * xv.size());
  }
  return x.tape().record(std::move(out), {x}, [x, count](Tape& tape, const Tensor& g) {
    Tensor& dx = tape.grad_buffer(x);
    const std::size_t n = dx.size();
    for (std::size_t c = 0; c < count; ++c) {
      for (std::size_t i = 0; i < n; ++i) dx[i] += g[c * n + i];
    }
  });
}

}  // namespace espresso
