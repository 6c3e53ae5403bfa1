#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "core/tensor.hpp"

namespace mimgan {

class Graph;

/// Handle to a value recorded in a Graph. Cheap to copy; valid as long as the
/// owning graph lives.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return graph_ != nullptr; }
  Graph& graph() const;
  std::size_t id() const noexcept { return id_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  double item() const { return value().item(); }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// What a primitive's backward function sees. `in_grads[k]` is empty when
/// input k does not need a gradient; otherwise the function adds its
/// contribution into it.
struct GradContext {
  std::span<const double> out_grad;
  const Tensor& output;
  std::vector<const Tensor*> inputs;
  std::vector<std::span<double>> in_grads;
};

using BackwardFn = std::function<void(const GradContext&)>;

/// Reverse-mode tape. Nodes are appended in evaluation order, so the
/// insertion order is already a topological order and backward walks it in
/// reverse exactly once.
///
/// Leaves come in three kinds:
///   input():    constant, never receives a gradient;
///   param():    bound to an external Tensor whose grad slot receives the
///               gradient after each backward() (accumulating);
///   variable(): trainable leaf owned by the graph; read with grad().
///
/// A graph is single-threaded. Concurrent callers each own a private graph.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var input(Tensor value);
  /// The graph copies the value; `target` must outlive the next backward().
  Var param(Tensor& target);
  Var variable(Tensor value);

  /// Records the result of a primitive. `backward` may be empty for
  /// non-differentiable results.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  /// Propagates d(root)/d(node) to every node recorded before `root`.
  /// Bound parameters accumulate into their grad slot; intermediate node
  /// gradients are recomputed from scratch on every call.
  void backward(Var root);

  /// Gradient of the last backward() root w.r.t. `v`. Empty before any
  /// backward pass or when `v` was recorded after the root.
  std::span<const double> grad(Var v) const;

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Tensor* target = nullptr;
    bool requires_grad = false;
  };

  const Node& node(Var v) const;
  Var push(Node node);

  std::deque<Node> nodes_;
  std::vector<std::vector<double>> grads_;
};

}  // namespace mimgan
