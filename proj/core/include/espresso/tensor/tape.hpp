#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <vector>

#include "espresso/tensor/tensor.hpp"

namespace espresso {

/// A named trainable tensor. Identity (address) keys its gradient on a tape,
/// so a Parameter must outlive every tape it is registered with.
struct Parameter {
  std::string name;
  Tensor value;
};

class Tape;

/// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  Shape shape() const { return value().shape(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recorder. Operations append nodes in application order and
/// `backward` replays them in exact reverse. A tape belongs to one forward or
/// training step and is never shared between threads.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& grad_out)>;

  explicit Tape(Precision precision = Precision::f64) : precision_(precision) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Precision precision() const noexcept { return precision_; }

  Var constant(Tensor value);
  /// Registers a parameter; repeated registration returns the same node so
  /// gradients from every use accumulate in one place.
  Var parameter(Parameter& param);

  /// Appends an operation result. `backward` is dropped when no input needs
  /// a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor value, const std::vector<Var>& inputs, Backward backward);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  /// Adds `grad` into v's accumulator; ignored for nodes without gradients.
  void accumulate(Var v, const Tensor& grad);
  /// Zero-initialised accumulator of v for in-place updates.
  Tensor& grad_buffer(Var v);

  /// Seeds d(root)/d(root) = 1 on a single-element root and propagates.
  void backward(Var root);

  /// Gradient accumulated for v, or nullptr if none reached it.
  const Tensor* grad(Var v) const;
  /// Gradient for a registered parameter; zeros of its shape if unused.
  Tensor gradient(const Parameter& param) const;

  std::vector<Parameter*> parameters() const { return params_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  /// Node ids visited by the most recent backward pass, in visit order.
  const std::vector<std::size_t>& last_backward_order() const noexcept { return visit_order_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    bool requires_grad = false;
    bool has_grad = false;
  };

  Var push(Tensor value, bool requires_grad, Backward backward);

  Precision precision_;
  std::deque<Node> nodes_;  // deque: Var::value() references stay valid as nodes are appended
  std::vector<Parameter*> params_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
  std::vector<std::size_t> visit_order_;
};

}  // namespace espresso
