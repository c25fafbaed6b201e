#include "mug/numerics/tape.h"

#include <string>

#include "mug/errors.h"

namespace mug::numerics {

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite input");
  Node node;
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  if (!p.value.all_finite()) throw NumericError("param " + p.name + ": non-finite value");
  Node node;
  node.ref = &p.value;
  node.param = &p;
  node.requires_grad = recording_;
  nodes_.push_back(std::move(node));
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> parents, Backward backward) {
  return record(op, std::move(value), std::vector<Var>(parents), std::move(backward));
}

Var Tape::record(std::string_view op, Tensor value, const std::vector<Var>& parents, Backward backward) {
  if (!value.all_finite()) throw NumericError(std::string(op) + ": non-finite result");
  Node node;
  node.owned = std::move(value);
  if (recording_) {
    for (const Var& p : parents) {
      if (p.tape_ != this) throw ValidationError(std::string(op) + ": operand from another tape");
      node.requires_grad = node.requires_grad || nodes_[p.id_].requires_grad;
    }
    if (node.requires_grad) node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_buffer(Var v) {
  Node& node = nodes_.at(v.id_);
  if (!node.has_grad) {
    node.grad = Tensor(node.get().shape(), 0.0);
    node.has_grad = true;
  }
  return node.grad;
}

void Tape::backward(Var loss) {
  if (!recording_) throw ValidationError("backward: tape is not recording");
  if (loss.tape_ != this) throw ValidationError("backward: loss from another tape");
  if (value(loss).size() != 1) throw ShapeError("backward: loss must be a scalar");
  for (Node& node : nodes_) node.has_grad = false;
  if (!nodes_[loss.id_].requires_grad) return;
  grad_buffer(loss)[0] = 1.0;
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.has_grad || !node.backward) continue;
    node.backward(*this, node.get(), node.grad);
  }
}

const Tensor* Tape::grad(Var v) const {
  const Node& node = nodes_.at(v.id_);
  return node.has_grad ? &node.grad : nullptr;
}

const Tensor* Tape::grad(const Parameter& p) const {
  auto it = param_nodes_.find(&p);
  if (it == param_nodes_.end()) return nullptr;
  const Node& node = nodes_[it->second];
  return node.has_grad ? &node.grad : nullptr;
}

void Tape::for_each_param_grad(const std::function<void(const Parameter&, const Tensor&)>& fn) const {
  for (const auto& [param, id] : param_nodes_) {
    const Node& node = nodes_[id];
    if (node.has_grad) fn(*param, node.grad);
  }
}

}  // namespace mug::numerics
