#include "espresso/tensor/tape.hpp"

#include <stdexcept>

namespace espresso {

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("use of an unbound Var");
  return tape_->value(*this);
}

Var Tape::push(Tensor value, bool requires_grad, Backward backward) {
  value.round_to(precision_);
  nodes_.push_back(Node{std::move(value), Tensor(), requires_grad ? std::move(backward) : nullptr,
                        requires_grad, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(Parameter& param) {
  if (auto it = param_nodes_.find(&param); it != param_nodes_.end()) return Var(this, it->second);
  Var v = push(param.value, true, nullptr);
  param_nodes_.emplace(&param, v.id());
  params_.push_back(&param);
  return v;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw std::logic_error("operands recorded on different tapes");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  return push(std::move(value), needs, std::move(backward));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, Backward backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw std::logic_error("operands recorded on different tapes");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  return push(std::move(value), needs, std::move(backward));
}

Tensor& Tape::grad_buffer(Var v) {
  Node& node = nodes_[v.id()];
  if (!node.has_grad) {
    node.grad = Tensor(node.value.shape());
    node.has_grad = true;
  }
  return node.grad;
}

void Tape::accumulate(Var v, const Tensor& grad) {
  if (!nodes_[v.id()].requires_grad) return;
  Tensor& buffer = grad_buffer(v);
  if (buffer.size() != grad.size()) {
    throw ShapeError("gradient shape " + to_string(grad.shape()) + " does not match value " +
                     to_string(buffer.shape()));
  }
  for (std::size_t i = 0; i < grad.size(); ++i) buffer[i] += grad[i];
}

void Tape::backward(Var root) {
  if (root.tape_ != this) throw std::logic_error("backward root belongs to another tape");
  if (nodes_[root.id()].value.size() != 1) {
    throw ShapeError("backward needs a single-element root, got " +
                     to_string(nodes_[root.id()].value.shape()));
  }
  visit_order_.clear();
  if (!nodes_[root.id()].requires_grad) return;
  grad_buffer(root)[0] += 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.has_grad || !node.backward) continue;
    node.grad.round_to(precision_);
    visit_order_.push_back(i);
    // The callback may grow other nodes' accumulators but never appends to
    // nodes_, so the reference stays valid.
    node.backward(*this, node.grad);
  }
}

const Tensor* Tape::grad(Var v) const {
  const Node& node = nodes_[v.id()];
  return node.has_grad ? &node.grad : nullptr;
}

Tensor Tape::gradient(const Parameter& param) const {
  auto it = param_nodes_.find(&param);
  if (it == param_nodes_.end() || !nodes_[it->second].has_grad) return Tensor(param.value.shape());
  return nodes_[it->second].grad;
}

}  // namespace espresso
