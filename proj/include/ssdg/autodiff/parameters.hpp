#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ssdg/autodiff/tape.hpp"
#include "ssdg/autodiff/tensor.hpp"

namespace ssdg::ad {

enum class ParamRole { kernel, recurrent, bias };

std::string_view to_string(ParamRole role);
ParamRole parse_role(std::string_view text);

struct Parameter {
  std::string name;   // "<group>/<layer>/<slot>", unique within a set
  std::string group;  // "generator", "ssi_head", "classifier"
  ParamRole role = ParamRole::kernel;
  bool regularized = false;  // included in the L2 penalty
  Tensor tensor;

  std::string layer() const;  // middle path component
};

/// Named, ordered collection of trainable tensors.
class ParameterSet {
 public:
  Parameter& add(Parameter param);

  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;
  std::size_t scalar_count(std::string_view group) const;

  auto begin() noexcept { return params_.begin(); }
  auto end() noexcept { return params_.end(); }
  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }

  void zero_gradients();

  /// FNV-1a over names and raw value bytes of the selected parameters.
  std::uint64_t checksum(const std::function<bool(const Parameter&)>& select = {}) const;

 private:
  std::vector<Parameter> params_;
};

/// coefficient * sum of squares over the regularized parameters.
double l2_penalty(const ParameterSet& params, double coefficient);

/// Parameters of a set registered as tape leaves.
class BoundParameters {
 public:
  using Selector = std::function<bool(const Parameter&)>;

  /// Parameters rejected by `trainable` are bound without gradients.
  BoundParameters(Tape& tape, ParameterSet& params, const Selector& trainable = {});

  Var operator[](std::string_view name) const;
  std::vector<Var> regularized() const;

  /// Adds the tape gradients of the last backward() into each tensor's gradient.
  void accumulate_gradients() const;

 private:
  Tape* tape_;
  ParameterSet* params_;
  std::vector<Var> vars_;
};

}  // namespace ssdg::ad
