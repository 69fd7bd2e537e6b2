#include "ssdg/autodiff/tape.hpp"

#include "ssdg/errors.hpp"

namespace ssdg::ad {

Var Tape::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(nodes_.size() - 1);
}

Var Tape::leaf(const Tensor& external, bool requires_grad) {
  Node n;
  n.external = &external;
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    const Node& src = node(in);
    n.requires_grad = n.requires_grad || src.requires_grad;
    n.inputs.push_back(in.id());
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(nodes_.size() - 1);
}

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || v.id() >= nodes_.size()) throw std::out_of_range("invalid tape variable");
  return nodes_[v.id()];
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id() >= nodes_.size()) throw std::out_of_range("invalid tape variable");
  return nodes_[v.id()];
}

const Tensor& Tape::value(Var v) const { return node(v).value(); }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

std::span<const double> Tape::gradient(Var v) const { return node(v).grad; }

void Tape::backward(Var root) {
  const std::vector<double> seed(value(root).size(), 1.0);
  if (seed.size() != 1) throw ShapeError("backward() without a seed needs a scalar root");
  backward(root, seed);
}

void Tape::backward(Var root, std::span<const double> seed) {
  Node& r = node(root);
  if (seed.size() != r.value().size()) throw ShapeError("backward seed size mismatch");
  for (Node& n : nodes_) n.grad.clear();
  r.grad.assign(seed.begin(), seed.end());
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.backward) continue;
    Context ctx(*this, Context::NodeRef{n.grad, n.inputs, i});
    n.backward(ctx);
  }
}

const Tensor& Tape::Context::input(std::size_t i) const {
  return tape_.nodes_[node_.inputs[i]].value();
}

bool Tape::Context::input_requires_grad(std::size_t i) const {
  return tape_.nodes_[node_.inputs[i]].requires_grad;
}

std::span<double> Tape::Context::input_gradient(std::size_t i) {
  Node& in = tape_.nodes_[node_.inputs[i]];
  if (in.grad.empty()) in.grad.assign(in.value().size(), 0.0);
  return in.grad;
}

const Tensor& Tape::Context::output() const { return tape_.nodes_[node_.id].value(); }

}  // namespace ssdg::ad
