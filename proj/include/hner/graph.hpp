#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "hner/tensor.hpp"

namespace hner {

class Graph;

// Handle to a node recorded on a Graph. Cheap to copy; valid as long as the
// graph that created it.
class Var {
 public:
  Var() = default;

  const Shape& shape() const;
  std::span<const double> value() const;
  std::size_t size() const { return value().size(); }
  double item() const;
  Tensor to_tensor() const;

  Graph& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Append-only tape for reverse-mode differentiation. Node order is
// topological by construction; backward() walks it in reverse.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  struct Node {
    const char* op = "";
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Tensor* bound = nullptr;
    bool needs_grad = false;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Constant leaf; never receives gradient.
  Var input(Tensor t);
  // Leaf bound to an external tensor. When t.requires_grad(), backward()
  // accumulates into t.grad().
  Var param(Tensor& t);
  // Read-only binding; behaves like input().
  Var param(const Tensor& t);

  Var record(const char* op, Shape shape, std::vector<double> value, std::vector<std::size_t> inputs,
             BackwardFn backward);

  // Populates gradients of every reachable bound tensor. Node gradients are
  // reset on entry; tensor gradients accumulate across calls.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  Node& node(std::size_t id) { return nodes_[id]; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  // Gradient buffer of a node, allocated as zeros on first use.
  std::span<double> grad_buffer(std::size_t id);

 private:
  std::vector<Node> nodes_;
};

}  // namespace hner
