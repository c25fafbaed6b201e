#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mug/numerics/params.h"
#include "mug/numerics/tensor.h"

namespace mug::numerics {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode tape. Nodes are appended in evaluation order, so reverse order is a
// valid topological order for backpropagation. A non-recording tape skips all
// gradient bookkeeping and is used for inference and finite differences.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& out_value, const Tensor& out_grad)>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Tensor value);
  // Leaf bound to a parameter; repeated calls with the same parameter share one node.
  Var param(const Parameter& p);

  const Tensor& value(Var v) const { return nodes_.at(v.id_).get(); }
  bool requires_grad(Var v) const { return nodes_.at(v.id_).requires_grad; }

  // Seeds d(loss)/d(loss) = 1 and propagates to every node that requires a gradient.
  void backward(Var loss);

  // Gradient of the last backward() with respect to a node or parameter; nullptr if none flowed.
  const Tensor* grad(Var v) const;
  const Tensor* grad(const Parameter& p) const;
  void for_each_param_grad(const std::function<void(const Parameter&, const Tensor&)>& fn) const;

  // Op authoring: append a computed value. `op` names the op in diagnostics.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> parents, Backward backward);
  Var record(std::string_view op, Tensor value, const std::vector<Var>& parents, Backward backward);
  // Mutable, zero-initialised gradient accumulator of a node (backward passes only).
  Tensor& grad_buffer(Var v);

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    Backward backward;
    const Parameter* param = nullptr;

    const Tensor& get() const { return ref != nullptr ? *ref : owned; }
  };

  bool recording_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

}  // namespace mug::numerics
