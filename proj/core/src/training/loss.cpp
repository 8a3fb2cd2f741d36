#include "espresso/training/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace espresso {

namespace {

std::vector<double> softmax(const Tensor& logits, double& log_normalizer) {
  const auto v = logits.data();
  const double peak = *std::max_element(v.begin(), v.end());
  std::vector<double> probs(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    probs[i] = std::exp(v[i] - peak);
    total += probs[i];
  }
  for (auto& p : probs) p /= total;
  log_normalizer = peak + std::log(total);
  return probs;
}

void check_label(const Tensor& logits, std::size_t label) {
  if (label >= logits.size()) {
    throw std::out_of_range("label " + std::to_string(label) + " out of range for " +
                            std::to_string(logits.size()) + " classes");
  }
}

}  // namespace

double cross_entropy(const Tensor& logits, std::size_t label) {
  check_label(logits, label);
  double log_normalizer = 0.0;
  softmax(logits, log_normalizer);
  return log_normalizer - logits[label];
}

Var cross_entropy(Var logits, std::size_t label) {
  const Tensor& v = logits.value();
  check_label(v, label);
  double log_normalizer = 0.0;
  std::vector<double> probs = softmax(v, log_normalizer);
  const double loss = log_normalizer - v[label];
  return logits.tape().record(Tensor::scalar(loss), {logits},
                              [logits, label, probs = std::move(probs)](Tape& tape,
                                                                        const Tensor& g) {
                                Tensor& d = tape.grad_buffer(logits);
                                for (std::size_t i = 0; i < probs.size(); ++i) {
                                  d[i] += g[0] * (probs[i] - (i == label ? 1.0 : 0.0));
                                }
                              });
}

}  // namespace espresso
