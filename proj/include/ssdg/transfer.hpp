#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssdg/models.hpp"

namespace ssdg::transfer {

struct FineTuneConfig {
  double fraction = 0.10;
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Parameters updated during fine-tuning: the first LSTM+LN pair of the
/// generator, plus the first two dense layers of the SSI head when the head
/// has more than one layer (ADG and IRM).
bool is_trainable(const models::ModelBundle& bundle, const ad::Parameter& param);

/// Chronological split of one well's samples: the first floor(fraction * n)
/// sequences adapt, the rest evaluate. Throws DomainError when the samples
/// are not sorted by t_start or come from several wells.
struct TargetSlices {
  std::vector<const dataset::SequenceSample*> adaptation;
  std::vector<const dataset::SequenceSample*> evaluation;
};
TargetSlices split_target(std::span<const dataset::SequenceSample* const> samples, double fraction);

struct FineTuneResult {
  models::ModelBundle bundle;
  std::uint64_t frozen_checksum_before = 0;
  std::uint64_t frozen_checksum_after = 0;
  std::size_t adaptation_count = 0;
};

/// Copies `source`, then trains only the trainable set on the adaptation
/// slice with Adam and the SSI MSE (+ L2) for `epochs`. Throws
/// InsufficientDataError when the slice holds less than one batch.
FineTuneResult fine_tune(const models::ModelBundle& source, std::span<const dataset::SequenceSample* const> target,
                         const FineTuneConfig& config);

struct TransferRow {
  std::string well;
  std::string kind;
  double dtw_pre = 0.0;
  double dtw_post = 0.0;
  double improvement_pct = 0.0;
};

/// Scores both bundles on the evaluation slice only.
TransferRow evaluate_transfer(const models::ModelBundle& pre, const models::ModelBundle& post,
                              std::span<const dataset::SequenceSample* const> target, double fraction);

inline constexpr const char* kTransferHeader = "well,kind,dtw_pre,dtw_post,improvement_pct";
std::string transfer_csv(const std::vector<TransferRow>& rows);

}  // namespace ssdg::transfer
