#include "ssdg/autodiff/adam.hpp"

#include <cmath>

namespace ssdg::ad {

void Adam::step(ParameterSet& params, const std::function<bool(const Parameter&)>& trainable) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  for (auto& p : params) {
    if (trainable && !trainable(p)) continue;
    auto values = p.tensor.values();
    const auto grad = p.tensor.gradient();
    auto& m = m_[p.name];
    auto& v = v_[p.name];
    if (m.size() != values.size()) {
      m.assign(values.size(), 0.0);
      v.assign(values.size(), 0.0);
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * grad[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

const std::vector<double>* Adam::first_moment(const std::string& name) const {
  const auto it = m_.find(name);
  return it == m_.end() ? nullptr : &it->second;
}

const std::vector<double>* Adam::second_moment(const std::string& name) const {
  const auto it = v_.find(name);
  return it == v_.end() ? nullptr : &it->second;
}

}  // namespace ssdg::ad
