#include "ssdg/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ssdg/autodiff/adam.hpp"
#include "ssdg/errors.hpp"
#include "ssdg/rng.hpp"

namespace ssdg::objectives {
namespace {

struct Session {
  ad::Tape tape;
  models::BoundModel model;

  Session(models::ModelBundle& bundle, const ad::BoundParameters::Selector& trainable)
      : model(tape, bundle, trainable) {}
};

ad::Var l2_term(Session& s, const models::ModelBundle& bundle) {
  const auto regs = s.model.params().regularized();
  return ad::l2_penalty(s.tape, regs, bundle.generator.regularization_coefficient);
}

void finish(Session& s, models::ModelBundle& bundle, ad::Var total) {
  bundle.params.zero_gradients();
  s.tape.backward(total);
  s.model.params().accumulate_gradients();
}

}  // namespace

Batch make_batch(std::span<const dataset::SequenceSample* const> samples) {
  Batch b;
  b.features = models::stack_features(samples);
  b.targets.reserve(samples.size());
  b.domains.reserve(samples.size());
  for (const auto* s : samples) {
    b.targets.push_back(s->ssi);
    b.domains.push_back(s->domain_id);
  }
  return b;
}

LossBreakdown erm_loss(models::ModelBundle& bundle, const Batch& batch,
                       const ad::BoundParameters::Selector& trainable) {
  if (batch.size() == 0) throw DomainError("erm_loss: empty batch");
  Session s(bundle, trainable);
  const ad::Var x = s.tape.leaf(batch.features, false);
  const ad::Var pred = s.model.ssi(s.model.embed(x));
  const ad::Var mse = ad::mse_loss(s.tape, pred, batch.targets);
  const ad::Var l2 = l2_term(s, bundle);
  const ad::Var total = ad::add(s.tape, mse, l2);
  finish(s, bundle, total);

  LossBreakdown out;
  out.ssi_mse = s.tape.value(mse).item();
  out.l2 = s.tape.value(l2).item();
  out.total = s.tape.value(total).item();
  return out;
}

LossBreakdown adg_loss(models::ModelBundle& bundle, const Batch& batch, double lambda) {
  if (batch.size() == 0) throw DomainError("adg_loss: empty batch");
  if (!bundle.has_classifier()) throw ConfigError("adg_loss requires an adg model");
  if (batch.domains.size() != batch.size()) throw ConfigError("adg_loss: domain labels missing");
  for (int d : batch.domains)
    if (d < 0) throw ConfigError("adg_loss: batch contains samples without a domain label");

  LossBreakdown out;
  out.penalty_weight = lambda;
  if (std::set<int>(batch.domains.begin(), batch.domains.end()).size() < 2)
    out.warnings.push_back("adg_loss: batch holds a single domain");

  Session s(bundle, {});
  const ad::Var x = s.tape.leaf(batch.features, false);
  const ad::Var z = s.model.embed(x);
  const ad::Var pred = s.model.ssi(z);
  const ad::Var logits = s.model.domain_logits(z, lambda);
  const ad::Var mse = ad::mse_loss(s.tape, pred, batch.targets);
  const ad::Var ce = ad::cross_entropy_loss(s.tape, logits, batch.domains);
  const ad::Var l2 = l2_term(s, bundle);
  const ad::Var total = ad::add(s.tape, ad::add(s.tape, mse, ce), l2);
  finish(s, bundle, total);

  out.ssi_mse = s.tape.value(mse).item();
  out.domain_ce = s.tape.value(ce).item();
  out.l2 = s.tape.value(l2).item();
  out.total = s.tape.value(total).item();
  return out;
}

LossBreakdown irm_loss(models::ModelBundle& bundle, std::span<const Batch> domain_batches, double alpha) {
  if (bundle.kind != models::ModelKind::irm || !bundle.irm_beta)
    throw ConfigError("irm_loss requires an irm model");
  LossBreakdown out;
  out.penalty_weight = alpha;

  Session s(bundle, {});
  std::vector<ad::Var> mses, penalties;
  for (std::size_t d = 0; d < domain_batches.size(); ++d) {
    const Batch& b = domain_batches[d];
    if (b.size() == 0) {
      out.warnings.push_back("irm_loss: domain batch " + std::to_string(d) + " is empty, skipped");
      continue;
    }
    const ad::Var pred = s.model.ssi(s.model.embed(s.tape.leaf(b.features, false)));
    mses.push_back(ad::mse_loss(s.tape, pred, b.targets));
    penalties.push_back(ad::invariance_penalty(s.tape, pred, b.targets, *bundle.irm_beta));
  }
  if (mses.empty()) throw DomainError("irm_loss: every domain batch is empty");

  const ad::Var mse = ad::sum(s.tape, mses);
  const ad::Var penalty = ad::sum(s.tape, penalties);
  const ad::Var l2 = l2_term(s, bundle);
  const ad::Var total = ad::add(s.tape, ad::add(s.tape, mse, ad::scale(s.tape, penalty, alpha)), l2);
  finish(s, bundle, total);

  out.ssi_mse = s.tape.value(mse).item();
  out.irm_penalty = s.tape.value(penalty).item();
  out.l2 = s.tape.value(l2).item();
  out.total = s.tape.value(total).item();
  return out;
}

double estimate_h_divergence(const ad::Tensor& a, const ad::Tensor& b, const ProbeOptions& options) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1))
    throw ShapeError("estimate_h_divergence: inputs must be [N x D] with equal D");
  if (a.dim(0) < kMinProbeSamples || b.dim(0) < kMinProbeSamples)
    throw InsufficientDataError("estimate_h_divergence: need at least " + std::to_string(kMinProbeSamples) +
                                " samples per side, got " + std::to_string(a.dim(0)) + " and " +
                                std::to_string(b.dim(0)));
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0))
    throw ConfigError("estimate_h_divergence: train_fraction must lie in (0, 1)");

  const std::size_t D = a.dim(1);
  Rng rng(options.seed, 0x4d0be);

  // Per-side shuffle and split so both sides appear in train and held-out rows.
  struct Row {
    const double* x;
    int label;
  };
  std::vector<Row> train, held;
  for (int side = 0; side < 2; ++side) {
    const ad::Tensor& t = side == 0 ? a : b;
    std::vector<std::size_t> idx(t.dim(0));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(idx));
    auto n_train = static_cast<std::size_t>(std::floor(options.train_fraction * static_cast<double>(idx.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    for (std::size_t k = 0; k < idx.size(); ++k)
      (k < n_train ? train : held).push_back({t.values().data() + idx[k] * D, side});
  }

  // Standardise with training-row statistics.
  std::vector<double> mean(D, 0.0), scale(D, 0.0);
  for (const auto& r : train)
    for (std::size_t j = 0; j < D; ++j) mean[j] += r.x[j];
  for (auto& m : mean) m /= static_cast<double>(train.size());
  for (const auto& r : train)
    for (std::size_t j = 0; j < D; ++j) scale[j] += (r.x[j] - mean[j]) * (r.x[j] - mean[j]);
  for (auto& v : scale) {
    v = std::sqrt(v / static_cast<double>(train.size()));
    if (!(v > 1e-12)) v = 1.0;
  }
  auto pack = [&](const std::vector<Row>& rows, std::vector<int>& labels) {
    ad::Tensor t({rows.size(), D});
    labels.clear();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < D; ++j) t[i * D + j] = (rows[i].x[j] - mean[j]) / scale[j];
      labels.push_back(rows[i].label);
    }
    return t;
  };
  std::vector<int> train_labels, held_labels;
  const ad::Tensor x_train = pack(train, train_labels);
  const ad::Tensor x_held = pack(held, held_labels);

  const std::size_t H = options.hidden;
  ad::ParameterSet probe;
  auto glorot = [&](std::size_t in, std::size_t out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    ad::Tensor t({in, out});
    for (auto& v : t.values()) v = rng.uniform(-limit, limit);
    return t;
  };
  probe.add({"probe/dense0/kernel", "probe", ad::ParamRole::kernel, false, glorot(D, H)});
  probe.add({"probe/dense0/bias", "probe", ad::ParamRole::bias, false, ad::Tensor({H})});
  probe.add({"probe/dense1/kernel", "probe", ad::ParamRole::kernel, false, glorot(H, 2)});
  probe.add({"probe/dense1/bias", "probe", ad::ParamRole::bias, false, ad::Tensor({2})});

  auto logits_of = [&](ad::Tape& tape, const ad::BoundParameters& p, const ad::Tensor& x) {
    const ad::Var h = ad::dense(tape, tape.leaf(x, false), p["probe/dense0/kernel"], p["probe/dense0/bias"],
                                ad::Activation::relu);
    return ad::dense(tape, h, p["probe/dense1/kernel"], p["probe/dense1/bias"], ad::Activation::linear);
  };

  ad::Adam adam({options.learning_rate});
  for (std::size_t step = 0; step < options.steps; ++step) {
    ad::Tape tape;
    ad::BoundParameters p(tape, probe);
    const ad::Var loss = ad::cross_entropy_loss(tape, logits_of(tape, p, x_train), train_labels);
    probe.zero_gradients();
    tape.backward(loss);
    p.accumulate_gradients();
    adam.step(probe);
  }

  ad::Tape tape;
  ad::BoundParameters p(tape, probe, [](const ad::Parameter&) { return false; });
  const auto& logits = tape.value(logits_of(tape, p, x_held));
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < held.size(); ++i) {
    const int predicted = logits[2 * i + 1] > logits[2 * i] ? 1 : 0;
    if (predicted != held_labels[i]) ++wrong;
  }
  const double err = static_cast<double>(wrong) / static_cast<double>(held.size());
  return 1.0 - 2.0 * err;
}

}  // namespace ssdg::objectives
