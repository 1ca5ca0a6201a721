#include "hner/graph.hpp"

#include "hner/errors.hpp"

namespace hner {

const Shape& Var::shape() const { return graph_->node(id_).shape; }

std::span<const double> Var::value() const { return graph_->node(id_).value; }

double Var::item() const {
  const auto& n = graph_->node(id_);
  if (n.value.size() != 1) throw DimensionError("item() on non-scalar of shape " + shape_string(n.shape));
  return n.value[0];
}

Tensor Var::to_tensor() const {
  const auto& n = graph_->node(id_);
  return Tensor(n.shape, n.value);
}

Var Graph::input(Tensor t) {
  Node n;
  n.op = "input";
  n.shape = t.shape();
  n.value.assign(t.values().begin(), t.values().end());
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::param(Tensor& t) {
  Node n;
  n.op = "param";
  n.shape = t.shape();
  n.value.assign(t.values().begin(), t.values().end());
  if (t.requires_grad()) {
    n.bound = &t;
    n.needs_grad = true;
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::param(const Tensor& t) {
  Node n;
  n.op = "param";
  n.shape = t.shape();
  n.value.assign(t.values().begin(), t.values().end());
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(const char* op, Shape shape, std::vector<double> value, std::vector<std::size_t> inputs,
                  BackwardFn backward) {
  Node n;
  n.op = op;
  n.shape = std::move(shape);
  n.value = std::move(value);
  for (auto in : inputs) {
    if (in >= nodes_.size()) throw StateError(std::string("node input out of range in op ") + op);
    n.needs_grad = n.needs_grad || nodes_[in].needs_grad;
  }
  n.inputs = std::move(inputs);
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

std::span<double> Graph::grad_buffer(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Graph::backward(Var loss) {
  if (&loss.graph() != this) throw StateError("backward() called with a Var from another graph");
  auto& root = nodes_[loss.id()];
  if (root.value.size() != 1) throw DimensionError("backward() needs a scalar loss, got " + shape_string(root.shape));
  for (auto& n : nodes_) n.grad.clear();
  if (!root.needs_grad) return;
  root.grad.assign(1, 1.0);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    auto& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, id);
    if (n.bound != nullptr) n.bound->accumulate_grad(n.grad);
  }
}

}  // namespace hner
