#include "dtm/tape.hpp"

#include "dtm/errors.hpp"

namespace dtm {

Var Tape::push(Tensor value, std::vector<int> inputs, BackFn back, bool is_param) {
  Node n;
  n.value = std::move(value);
  n.inputs = std::move(inputs);
  n.back = std::move(back);
  n.needs_grad = is_param;
  for (int in : n.inputs) {
    if (in < 0 || in >= static_cast<int>(nodes_.size()))
      throw UsageError("tape input id out of range");
    if (nodes_[static_cast<size_t>(in)].needs_grad) n.needs_grad = true;
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::make(Tensor value, std::vector<int> inputs, BackFn back) {
  return push(std::move(value), std::move(inputs), std::move(back), false);
}

Tensor& Tape::grad_slot(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.data.empty()) n.grad = Tensor::zeros(n.value.dims);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw UsageError("backward: loss lives on another tape");
  if (ran_backward_) throw UsageError("backward: tape already differentiated");
  const Tensor& lv = value(loss);
  if (lv.numel() != 1) throw UsageError("backward: loss is not scalar, got " + lv.dims_str());
  ran_backward_ = true;
  grad_slot(loss.id())(0) = 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.back || !n.needs_grad) continue;
    if (n.grad.data.empty()) continue;  // the loss never reached this node
    n.back(*this, id);
  }
}

Tensor Tape::grad_of(Var v) {
  if (v.tape() != this) throw UsageError("grad_of: value lives on another tape");
  if (!ran_backward_) throw UsageError("grad_of: call backward first");
  return grad_slot(v.id());
}

}  // namespace dtm
