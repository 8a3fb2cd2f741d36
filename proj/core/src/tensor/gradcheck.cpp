#include "espresso/tensor/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace espresso {

namespace {

double evaluate(const ScalarFunction& f) {
  Tape tape;
  const Var out = f(tape);
  if (out.value().size() != 1) throw ShapeError("gradient check needs a scalar function");
  const double v = out.value()[0];
  if (!std::isfinite(v)) throw std::domain_error("gradient check: non-finite function value");
  return v;
}

}  // namespace

GradCheckResult finite_diff_grad_check(const ScalarFunction& f,
                                       std::span<Parameter* const> params, double h) {
  if (!(h >= 1e-6 && h <= 1e-4)) throw std::invalid_argument("step h must lie in [1e-6, 1e-4]");

  std::vector<Tensor> analytic;
  {
    Tape tape;
    const Var out = f(tape);
    if (out.value().size() != 1) throw ShapeError("gradient check needs a scalar function");
    if (!std::isfinite(out.value()[0])) {
      throw std::domain_error("gradient check: non-finite function value");
    }
    tape.backward(out);
    analytic.reserve(params.size());
    for (const Parameter* p : params) analytic.push_back(tape.gradient(*p));
  }

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& param = *params[pi];
    for (std::size_t i = 0; i < param.value.size(); ++i) {
      const double saved = param.value[i];
      param.value[i] = saved + h;
      const double plus = evaluate(f);
      param.value[i] = saved - h;
      const double minus = evaluate(f);
      param.value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double err = std::abs(analytic[pi][i] - numeric) / std::max(1.0, std::abs(numeric));
      ++result.entries_checked;
      if (err > result.max_relative_error || result.worst_parameter.empty()) {
        result.max_relative_error = err;
        result.worst_parameter = param.name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace espresso
