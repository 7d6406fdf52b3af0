#pragma once

#include <functional>
#include <vector>

#include "dtm/tensor.hpp"

namespace dtm {

class Tape;

// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  const Tensor& val() const;
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* t, int id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Ordered record of the primitive operations of one forward pass. Creation
// order is a topological order, so reverse traversal implements reverse-mode
// differentiation. A tape is confined to one thread for its forward+backward
// lifetime.
class Tape {
 public:
  // Accumulates into the gradient slots of the node's inputs.
  using BackFn = std::function<void(Tape&, int self)>;

  Var constant(Tensor value) { return push(std::move(value), {}, nullptr, false); }

  // Registers a trainable leaf; it always receives a gradient slot (exact
  // zeros when unused by the loss).
  Var param(Tensor value) { return push(std::move(value), {}, nullptr, true); }

  Var make(Tensor value, std::vector<int> inputs, BackFn back);

  const Tensor& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& value(Var v) const { return value(v.id()); }
  bool needs_grad(int id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }

  // Gradient accumulation slot; allocates zeros of the value's shape on
  // first use.
  Tensor& grad_slot(int id);
  bool grad_allocated(int id) const { return !nodes_[static_cast<size_t>(id)].grad.data.empty(); }

  // Reverse traversal from a scalar loss. May be called once per tape.
  void backward(Var loss);

  // Gradient of the last backward() with respect to v; exact zeros when the
  // loss never touched v.
  Tensor grad_of(Var v);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<int> inputs;
    BackFn back;
    bool needs_grad = false;
  };

  Var push(Tensor value, std::vector<int> inputs, BackFn back, bool is_param);

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

inline const Tensor& Var::val() const { return tape_->value(id_); }

}  // namespace dtm
