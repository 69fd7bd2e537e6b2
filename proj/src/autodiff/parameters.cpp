#include "ssdg/autodiff/parameters.hpp"

#include <cstring>

#include "ssdg/errors.hpp"

namespace ssdg::ad {

std::string_view to_string(ParamRole role) {
  switch (role) {
    case ParamRole::kernel: return "kernel";
    case ParamRole::recurrent: return "recurrent";
    case ParamRole::bias: return "bias";
  }
  return "kernel";
}

ParamRole parse_role(std::string_view text) {
  if (text == "kernel") return ParamRole::kernel;
  if (text == "recurrent") return ParamRole::recurrent;
  if (text == "bias") return ParamRole::bias;
  throw ConfigError("unknown parameter role '" + std::string(text) + "'");
}

std::string Parameter::layer() const {
  const auto first = name.find('/');
  const auto last = name.rfind('/');
  if (first == std::string::npos || first == last) return name;
  return name.substr(first + 1, last - first - 1);
}

Parameter& ParameterSet::add(Parameter param) {
  if (contains(param.name)) throw ConfigError("duplicate parameter name '" + param.name + "'");
  params_.push_back(std::move(param));
  return params_.back();
}

Parameter& ParameterSet::at(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

const Parameter& ParameterSet::at(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return p;
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

bool ParameterSet::contains(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return true;
  return false;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

std::size_t ParameterSet::scalar_count(std::string_view group) const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (p.group == group) n += p.tensor.size();
  return n;
}

void ParameterSet::zero_gradients() {
  for (auto& p : params_) p.tensor.zero_gradient();
}

std::uint64_t ParameterSet::checksum(const std::function<bool(const Parameter&)>& select) const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto feed = [&hash](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ULL;
    }
  };
  for (const auto& p : params_) {
    if (select && !select(p)) continue;
    feed(p.name.data(), p.name.size());
    feed(p.tensor.values().data(), p.tensor.size() * sizeof(double));
  }
  return hash;
}

double l2_penalty(const ParameterSet& params, double coefficient) {
  double total = 0.0;
  for (const auto& p : params) {
    if (!p.regularized) continue;
    for (const double v : p.tensor.values()) total += v * v;
  }
  return coefficient * total;
}

BoundParameters::BoundParameters(Tape& tape, ParameterSet& params, const Selector& trainable)
    : tape_(&tape), params_(&params) {
  vars_.reserve(params.size());
  for (const auto& p : params) vars_.push_back(tape.leaf(p.tensor, !trainable || trainable(p)));
}

Var BoundParameters::operator[](std::string_view name) const {
  std::size_t i = 0;
  for (const auto& p : *params_) {
    if (p.name == name) return vars_[i];
    ++i;
  }
  throw std::out_of_range("no bound parameter named '" + std::string(name) + "'");
}

std::vector<Var> BoundParameters::regularized() const {
  std::vector<Var> out;
  std::size_t i = 0;
  for (const auto& p : *params_) {
    if (p.regularized) out.push_back(vars_[i]);
    ++i;
  }
  return out;
}

void BoundParameters::accumulate_gradients() const {
  std::size_t i = 0;
  for (auto& p : *params_) {
    const auto g = tape_->gradient(vars_[i++]);
    auto dst = p.tensor.gradient();
    if (g.empty()) continue;
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k];
  }
}

}  // namespace ssdg::ad
