#include "ssdg/transfer.hpp"

#include <cmath>
#include <sstream>

#include "ssdg/autodiff/adam.hpp"
#include "ssdg/errors.hpp"
#include "ssdg/io.hpp"
#include "ssdg/metrics.hpp"
#include "ssdg/objectives.hpp"
#include "ssdg/rng.hpp"

namespace ssdg::transfer {

void FineTuneConfig::validate() const {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("fine-tune fraction must lie in (0, 1)");
  if (batch_size == 0) throw ConfigError("fine-tune batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("fine-tune learning_rate must be positive");
}

bool is_trainable(const models::ModelBundle& bundle, const ad::Parameter& param) {
  const std::string layer = param.layer();
  if (param.group == models::kGeneratorGroup) return layer == "lstm0" || layer == "ln0";
  if (param.group == models::kSsiGroup && bundle.heads.ssi_head_widths.size() > 1)
    return layer == "dense0" || layer == "dense1";
  return false;
}

TargetSlices split_target(std::span<const dataset::SequenceSample* const> samples, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("target fraction must lie in (0, 1)");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i]->well_id != samples[0]->well_id) throw DomainError("target samples span several wells");
    if (!(samples[i]->t_start > samples[i - 1]->t_start))
      throw DomainError("target samples are not sorted by t_start");
  }
  const auto n_adapt = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(samples.size())));
  TargetSlices s;
  s.adaptation.assign(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n_adapt));
  s.evaluation.assign(samples.begin() + static_cast<std::ptrdiff_t>(n_adapt), samples.end());
  return s;
}

FineTuneResult fine_tune(const models::ModelBundle& source, std::span<const dataset::SequenceSample* const> target,
                         const FineTuneConfig& config) {
  config.validate();
  const TargetSlices slices = split_target(target, config.fraction);
  if (slices.adaptation.size() < config.batch_size)
    throw InsufficientDataError("fine-tuning needs at least one batch (" + std::to_string(config.batch_size) +
                                ") of target sequences, got " + std::to_string(slices.adaptation.size()));

  FineTuneResult result;
  result.bundle = source;
  models::ModelBundle& bundle = result.bundle;
  const auto trainable = [&bundle](const ad::Parameter& p) { return is_trainable(bundle, p); };
  const auto frozen = [&bundle](const ad::Parameter& p) { return !is_trainable(bundle, p); };
  result.frozen_checksum_before = bundle.params.checksum(frozen);
  result.adaptation_count = slices.adaptation.size();

  ad::Adam adam({config.learning_rate});
  Rng rng(config.seed, 0x7a4);
  std::vector<const dataset::SequenceSample*> order = slices.adaptation;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<const dataset::SequenceSample*>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      const auto batch = objectives::make_batch(std::span(order).subspan(start, n));
      const auto loss = objectives::erm_loss(bundle, batch, trainable);
      if (!std::isfinite(loss.total))
        throw NumericalError("fine-tuning loss is not finite at epoch " + std::to_string(epoch + 1));
      adam.step(bundle.params, trainable);
    }
  }
  for (auto& p : bundle.params) p.tensor.drop_gradient();
  result.frozen_checksum_after = bundle.params.checksum(frozen);
  return result;
}

TransferRow evaluate_transfer(const models::ModelBundle& pre, const models::ModelBundle& post,
                              std::span<const dataset::SequenceSample* const> target, double fraction) {
  const TargetSlices slices = split_target(target, fraction);
  if (slices.evaluation.empty()) throw InsufficientDataError("no evaluation sequences after the adaptation slice");
  std::vector<double> truth;
  for (const auto* s : slices.evaluation) truth.push_back(s->ssi);
  TransferRow row;
  row.well = slices.evaluation.front()->well_id;
  row.kind = models::to_string(pre.kind);
  row.dtw_pre = metrics::normalized_dtw(truth, models::predict(pre, slices.evaluation));
  row.dtw_post = metrics::normalized_dtw(truth, models::predict(post, slices.evaluation));
  row.improvement_pct = row.dtw_pre == 0.0 ? 0.0 : metrics::improvement_pct(row.dtw_pre, row.dtw_post);
  return row;
}

std::string transfer_csv(const std::vector<TransferRow>& rows) {
  std::ostringstream out;
  out << kTransferHeader << '\n';
  for (const auto& r : rows) {
    out << r.well << ',' << r.kind << ',' << io::format_double(r.dtw_pre) << ',' << io::format_double(r.dtw_post)
        << ',' << io::format_double(r.improvement_pct) << '\n';
  }
  return out.str();
}

}  // namespace ssdg::transfer
