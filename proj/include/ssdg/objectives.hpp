#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssdg/models.hpp"

namespace ssdg::objectives {

/// Model-ready mini-batch.
struct Batch {
  ad::Tensor features;          // [B x 60 x 5]
  std::vector<double> targets;  // SSI labels, size B
  std::vector<int> domains;     // domain ids, -1 where unlabelled

  std::size_t size() const noexcept { return targets.size(); }
};

Batch make_batch(std::span<const dataset::SequenceSample* const> samples);

struct LossBreakdown {
  double total = 0.0;
  double ssi_mse = 0.0;
  std::optional<double> domain_ce;
  std::optional<double> irm_penalty;  // sum over domains, unweighted
  double penalty_weight = 0.0;        // lambda (adg) or alpha (irm)
  double l2 = 0.0;
  std::vector<std::string> warnings;
};

/// Every objective zeroes the bundle's parameter gradients, records the
/// graph, runs one backward pass and leaves d(total)/d(param) in each
/// tensor's gradient buffer. Parameters rejected by `trainable` are treated
/// as constants and receive no gradient.
///
/// total = ssi_mse + l2
LossBreakdown erm_loss(models::ModelBundle& bundle, const Batch& batch,
                       const ad::BoundParameters::Selector& trainable = {});

/// total = ssi_mse + domain_ce + l2, with the classifier fed through a
/// gradient reversal of factor lambda: theta_C descends the cross-entropy
/// and theta_G receives -lambda times its gradient.
LossBreakdown adg_loss(models::ModelBundle& bundle, const Batch& batch, double lambda);

/// total = sum_d [ mse_d + alpha * (d mse(beta * p_d, y_d) / d beta at beta = 1)^2 ] + l2.
/// Empty domain batches are skipped with a warning.
LossBreakdown irm_loss(models::ModelBundle& bundle, std::span<const Batch> domain_batches, double alpha);

struct ProbeOptions {
  std::size_t steps = 200;
  std::size_t hidden = 16;
  double learning_rate = 1e-2;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMinProbeSamples = 10;

/// 1 - 2 * err of a fresh two-layer probe trained to tell the rows of `a`
/// from the rows of `b` ([N x D] each), err measured on a held-out 20%.
/// Throws InsufficientDataError with fewer than kMinProbeSamples rows per side.
double estimate_h_divergence(const ad::Tensor& a, const ad::Tensor& b, const ProbeOptions& options = {});

}  // namespace ssdg::objectives
