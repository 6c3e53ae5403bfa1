#include "core/graph.hpp"

#include <utility>

#include "core/error.hpp"

namespace mimgan {

Graph& Var::graph() const {
  if (!graph_) throw DomainError("use of an unbound Var");
  return *graph_;
}

const Tensor& Var::value() const { return graph().value(*this); }

const Graph::Node& Graph::node(Var v) const {
  if (v.graph_ != this) throw DomainError("Var belongs to a different graph");
  if (v.id_ >= nodes_.size()) throw DomainError("Var id out of range");
  return nodes_[v.id_];
}

Var Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::input(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::param(Tensor& target) {
  Node n;
  n.value = Tensor(target.shape(), std::vector<double>(target.data().begin(), target.data().end()));
  n.target = &target;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Graph::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Graph::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    node(in);  // validates ownership
    n.inputs.push_back(in.id_);
    if (nodes_[in.id_].requires_grad) n.requires_grad = true;
  }
  if (!backward) n.requires_grad = false;
  n.backward = std::move(backward);
  return push(std::move(n));
}

void Graph::backward(Var root) {
  if (!root.valid() || nodes_.empty()) {
    throw DomainError("backward() called before any forward computation was recorded");
  }
  const Node& r = node(root);
  if (r.value.size() != 1) {
    throw ShapeError("backward() needs a scalar root, got " + shape_to_string(r.value.shape()));
  }

  const std::size_t count = root.id_ + 1;
  grads_.assign(count, {});
  for (std::size_t i = 0; i < count; ++i) {
    if (nodes_[i].requires_grad) grads_[i].assign(nodes_[i].value.size(), 0.0);
  }
  if (r.requires_grad) grads_[root.id_][0] = 1.0;

  for (std::size_t i = count; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward) continue;
    GradContext ctx{grads_[i], n.value, {}, {}};
    ctx.inputs.reserve(n.inputs.size());
    ctx.in_grads.reserve(n.inputs.size());
    for (std::size_t in : n.inputs) {
      ctx.inputs.push_back(&nodes_[in].value);
      if (nodes_[in].requires_grad) {
        ctx.in_grads.emplace_back(grads_[in]);
      } else {
        ctx.in_grads.emplace_back();
      }
    }
    n.backward(ctx);
  }

  for (std::size_t i = 0; i < count; ++i) {
    if (nodes_[i].target) nodes_[i].target->accumulate_grad(grads_[i]);
  }
}

std::span<const double> Graph::grad(Var v) const {
  node(v);
  if (v.id_ >= grads_.size()) return {};
  return grads_[v.id_];
}

const Tensor& Graph::value(Var v) const { return node(v).value; }

bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }

}  // namespace mimgan
