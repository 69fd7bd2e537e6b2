#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ssdg/autodiff/parameters.hpp"

namespace ssdg::ad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moments are keyed by parameter name so one
/// optimizer can serve a whole model.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Applies one update from each tensor's gradient buffer. Parameters
  /// rejected by `trainable` are left untouched and keep no moments.
  void step(ParameterSet& params, const std::function<bool(const Parameter&)>& trainable = {});

  std::size_t steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }
  const std::vector<double>* first_moment(const std::string& name) const;
  const std::vector<double>* second_moment(const std::string& name) const;

 private:
  AdamConfig config_;
  std::size_t steps_ = 0;
  std::map<std::string, std::vector<double>> m_;
  std::map<std::string, std::vector<double>> v_;
};

}  // namespace ssdg::ad
