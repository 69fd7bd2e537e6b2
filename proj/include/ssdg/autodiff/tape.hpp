#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "ssdg/autodiff/tensor.hpp"

namespace ssdg::ad {

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return id_ != npos; }

 private:
  friend class Tape;
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  explicit Var(std::size_t id) : id_(id) {}
  std::size_t id_ = npos;
};

/// Linear record of a computation. Nodes are appended in evaluation order, so
/// reverse insertion order is a valid topological order for backward().
///
/// Leaves created with leaf() reference external tensors without copying; the
/// referenced tensors must outlive the tape. Gradients are kept on the tape and
/// harvested by the caller.
class Tape {
 public:
  class Context;
  using BackwardFn = std::function<void(Context&)>;

  Var constant(Tensor value);
  /// `requires_grad = false` binds a read-only input (frozen or inference).
  Var leaf(const Tensor& external, bool requires_grad = true);

  /// Appends an op result. `backward` is dropped when no input requires grad.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  /// Accumulated gradient of the last backward(); empty span if none reached v.
  std::span<const double> gradient(Var v) const;

  void backward(Var root);
  void backward(Var root, std::span<const double> seed);

  std::size_t size() const noexcept { return nodes_.size(); }

  class Context {
   public:
    std::span<const double> upstream() const { return node_.grad; }
    std::size_t input_count() const { return node_.inputs.size(); }
    const Tensor& input(std::size_t i) const;
    bool input_requires_grad(std::size_t i) const;
    /// Zero-initialised on first use; ops accumulate into it with +=.
    std::span<double> input_gradient(std::size_t i);
    const Tensor& output() const;

   private:
    friend class Tape;
    struct NodeRef {
      std::span<const double> grad;
      std::span<const std::size_t> inputs;
      std::size_t id;
    };
    Context(Tape& tape, NodeRef node) : tape_(tape), node_(node) {}
    Tape& tape_;
    NodeRef node_;
  };

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    std::vector<double> grad;

    const Tensor& value() const { return external ? *external : owned; }
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace ssdg::ad
