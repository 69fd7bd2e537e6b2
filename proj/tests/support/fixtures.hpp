#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "oracles/oracles.hpp"
#include "ssdg/autodiff/ops.hpp"
#include "ssdg/dataset.hpp"
#include "ssdg/models.hpp"
#include "ssdg/objectives.hpp"
#include "ssdg/rng.hpp"

namespace fixtures {

using ssdg::ad::Shape;
using ssdg::ad::Tape;
using ssdg::ad::Tensor;
using ssdg::ad::Var;

inline Tensor random_tensor(ssdg::Rng& rng, Shape shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = scale * rng.uniform(-1.0, 1.0);
  return t;
}

inline std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

/// |a - n| / max(|a|, |n|, 1e-6), the largest over all components.
inline double max_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  }
  return worst;
}

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Builds the scalar graph over leaves bound to `inputs`, compares the tape
/// gradient of every input against central differences. Returns the worst
/// relative error.
inline double gradient_check(std::vector<Tensor> inputs, const Builder& build) {
  auto evaluate = [&](std::vector<Tensor>& xs) {
    Tape tape;
    std::vector<Var> vars;
    for (auto& x : xs) vars.push_back(tape.leaf(x));
    return tape.value(build(tape, vars)).item();
  };
  Tape tape;
  std::vector<Var> vars;
  for (auto& x : inputs) vars.push_back(tape.leaf(x));
  const Var out = build(tape, vars);
  tape.backward(out);

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<double> analytic(inputs[k].size(), 0.0);
    const auto g = tape.gradient(vars[k]);
    if (!g.empty()) std::copy(g.begin(), g.end(), analytic.begin());
    std::vector<Tensor> work = inputs;
    const auto numeric = oracles::fd_gradient(
        [&](std::span<const double> p) {
          std::copy(p.begin(), p.end(), work[k].values().begin());
          return evaluate(work);
        },
        std::vector<double>(inputs[k].values().begin(), inputs[k].values().end()));
    worst = std::max(worst, max_relative_error(analytic, numeric));
  }
  return worst;
}

/// Gradient of a bundle-level loss against central differences over every
/// parameter selected by `select`. `loss` must run the objective (which
/// writes gradients) and return its total.
inline double bundle_gradient_check(ssdg::models::ModelBundle& bundle,
                                    const std::function<double(ssdg::models::ModelBundle&)>& loss,
                                    const std::function<double(ssdg::models::ModelBundle&)>& reference,
                                    const std::function<bool(const ssdg::ad::Parameter&)>& select) {
  loss(bundle);
  double worst = 0.0;
  for (auto& p : bundle.params) {
    if (!select(p)) continue;
    const std::vector<double> analytic(p.tensor.gradient().begin(), p.tensor.gradient().end());
    ssdg::models::ModelBundle work = bundle;
    auto& target = work.params.at(p.name).tensor;
    const auto numeric = oracles::fd_gradient(
        [&](std::span<const double> v) {
          std::copy(v.begin(), v.end(), target.values().begin());
          return reference(work);
        },
        std::vector<double>(p.tensor.values().begin(), p.tensor.values().end()));
    worst = std::max(worst, max_relative_error(analytic, numeric));
  }
  return worst;
}

/// Tiny model for gradient checks: 2 LSTM+LN pairs of `units`.
inline ssdg::models::ModelBundle tiny_bundle(ssdg::models::ModelKind kind, std::uint64_t seed,
                                             std::size_t domains = 3, std::size_t units = 3) {
  ssdg::models::GeneratorConfig gen;
  gen.hidden_layer_count = 0;
  gen.units = units;
  gen.regularization_coefficient = 1e-3;
  ssdg::models::HeadConfig heads;
  heads.ssi_head_widths = {4, 1};
  heads.classifier_widths = {4, domains};
  heads.grl_lambda = 1.0;
  return ssdg::models::build_model(kind, gen, heads, seed);
}

inline ssdg::objectives::Batch random_batch(ssdg::Rng& rng, std::size_t batch, std::size_t steps,
                                            std::size_t domains) {
  ssdg::objectives::Batch b;
  b.features = random_tensor(rng, {batch, steps, ssdg::dataset::kChannels});
  for (std::size_t i = 0; i < batch; ++i) {
    b.targets.push_back(rng.uniform(0.0, 1.5));
    b.domains.push_back(static_cast<int>(i % domains));
  }
  return b;
}

/// Synthetic split without simulation: the label is a smooth function of
/// the windows plus a per-domain offset in one channel.
inline ssdg::dataset::DatasetSplit tiny_split(std::uint64_t seed, std::size_t per_well = 24,
                                              std::size_t train_wells = 3) {
  using ssdg::dataset::kChannels;
  using ssdg::dataset::kWindow;
  ssdg::Rng rng(seed, 77);
  ssdg::dataset::DatasetSplit split;
  auto make = [&](const std::string& well, int domain) {
    std::vector<ssdg::dataset::SequenceSample> out;
    for (std::size_t i = 0; i < per_well; ++i) {
      ssdg::dataset::SequenceSample s;
      s.features.resize(kWindow * kChannels);
      const double amp = rng.uniform(0.0, 1.0);
      for (std::size_t t = 0; t < kWindow; ++t) {
        for (std::size_t c = 0; c < kChannels; ++c) {
          s.features[t * kChannels + c] =
              0.3 * rng.normal() + (c == 0 ? amp * std::sin(0.6 * static_cast<double>(t)) : 0.0) +
              (c == 1 ? 0.5 * domain : 0.0);
        }
      }
      s.ssi = 1.5 * amp;
      s.severity_class = ssdg::dataset::bin_ssi(s.ssi);
      s.domain_id = domain;
      s.well_id = well;
      s.t_start = 60.0 * static_cast<double>(i);
      out.push_back(std::move(s));
    }
    return out;
  };
  for (std::size_t w = 0; w < train_wells; ++w) {
    auto samples = make("w" + std::to_string(w), static_cast<int>(w));
    const std::size_t keep = samples.size() - samples.size() / 6;
    for (std::size_t i = 0; i < samples.size(); ++i)
      (i < keep ? split.train : split.validation).push_back(samples[i]);
    split.domain_map["w" + std::to_string(w)] = static_cast<int>(w);
    split.assignment["w" + std::to_string(w)] = ssdg::dataset::Partition::train;
    split.well_order.push_back("w" + std::to_string(w));
    split.well_fields["w" + std::to_string(w)] = "f" + std::to_string(w);
  }
  for (auto& s : make("t0", -1)) split.test.push_back(std::move(s));
  split.assignment["t0"] = ssdg::dataset::Partition::test;
  split.well_order.push_back("t0");
  split.well_fields["t0"] = "ft";
  split.domain_count = train_wells;
  return split;
}

}  // namespace fixtures
