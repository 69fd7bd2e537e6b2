#include <doctest.h>

#include <set>

#include "ssdg/errors.hpp"
#include "ssdg/transfer.hpp"
#include "support/fixtures.hpp"

using namespace ssdg;
using namespace ssdg::transfer;
using models::ModelKind;

namespace {

models::ModelBundle bundle_of(ModelKind kind, std::uint64_t seed = 1) {
  models::GeneratorConfig g;
  g.hidden_layer_count = 2;
  g.units = 4;
  models::HeadConfig h;
  h.ssi_head_widths = {5, 3, 1};
  h.classifier_widths = {4, 3};
  return models::build_model(kind, g, h, seed);
}

std::vector<const dataset::SequenceSample*> test_well(const dataset::DatasetSplit& split) {
  std::vector<const dataset::SequenceSample*> out;
  for (const auto& s : split.test) out.push_back(&s);
  return out;
}

}  // namespace

TEST_CASE("trainable set: first generator pair and the first head layers") {
  const auto adg = bundle_of(ModelKind::adg);
  std::set<std::string> names;
  for (const auto& p : adg.params)
    if (is_trainable(adg, p)) names.insert(p.name);
  CHECK(names == std::set<std::string>{"generator/lstm0/kernel", "generator/lstm0/recurrent", "generator/lstm0/bias",
                                       "generator/ln0/gain", "generator/ln0/shift", "ssi_head/dense0/kernel",
                                       "ssi_head/dense0/bias", "ssi_head/dense1/kernel", "ssi_head/dense1/bias"});
  const auto base = bundle_of(ModelKind::baseline);
  for (const auto& p : base.params)
    if (p.group == models::kSsiGroup) CHECK_FALSE(is_trainable(base, p));
}

TEST_CASE("target slices are chronological and disjoint") {
  const auto split = fixtures::tiny_split(1, 24, 2);
  const auto well = test_well(split);
  const auto slices = split_target(well, 0.1);
  CHECK(slices.adaptation.size() == 2);
  CHECK(slices.evaluation.size() == 22);
  CHECK(slices.adaptation.back()->t_start < slices.evaluation.front()->t_start);
  std::set<const dataset::SequenceSample*> seen(slices.adaptation.begin(), slices.adaptation.end());
  for (const auto* s : slices.evaluation) CHECK_FALSE(seen.contains(s));

  auto shuffled = well;
  std::swap(shuffled[0], shuffled[5]);
  CHECK_THROWS_AS(split_target(shuffled, 0.1), DomainError);
  auto mixed = well;
  mixed.push_back(&split.train.front());
  CHECK_THROWS_AS(split_target(mixed, 0.1), DomainError);
}

TEST_CASE("fine-tuning updates only the trainable set") {
  const auto split = fixtures::tiny_split(2, 60, 2);
  const auto well = test_well(split);
  for (auto kind : {ModelKind::baseline, ModelKind::adg, ModelKind::irm}) {
    const auto source = bundle_of(kind, 3);
    FineTuneConfig cfg;
    cfg.batch_size = 4;
    cfg.epochs = 3;
    const auto r = fine_tune(source, well, cfg);
    CHECK(r.adaptation_count == 6);
    CHECK(r.frozen_checksum_before == r.frozen_checksum_after);
    for (const auto& p : r.bundle.params) {
      const auto before = fixtures::vec(source.params.at(p.name).tensor.values());
      if (is_trainable(source, p)) CHECK(fixtures::vec(p.tensor.values()) != before);
      else CHECK(fixtures::vec(p.tensor.values()) == before);
    }
    CHECK(fine_tune(source, well, cfg).bundle.params.checksum() == r.bundle.params.checksum());

    cfg.epochs = 0;
    CHECK(fine_tune(source, well, cfg).bundle.params.checksum() == source.params.checksum());
  }
}

TEST_CASE("fine-tuning needs at least one batch") {
  const auto split = fixtures::tiny_split(3, 20, 2);
  FineTuneConfig cfg;
  cfg.batch_size = 16;
  CHECK_THROWS_AS(fine_tune(bundle_of(ModelKind::baseline), test_well(split), cfg), InsufficientDataError);
  cfg.fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("transfer rows score the evaluation slice") {
  const auto split = fixtures::tiny_split(4, 40, 2);
  const auto well = test_well(split);
  const auto pre = bundle_of(ModelKind::adg, 4);
  FineTuneConfig cfg;
  cfg.batch_size = 2;
  cfg.epochs = 2;
  const auto post = fine_tune(pre, well, cfg).bundle;
  const auto row = evaluate_transfer(pre, post, well, 0.1);
  CHECK(row.well == "t0");
  CHECK(row.kind == "adg");
  CHECK(row.improvement_pct == doctest::Approx((row.dtw_pre - row.dtw_post) / row.dtw_pre * 100.0));
  const auto same = evaluate_transfer(pre, pre, well, 0.1);
  CHECK(same.dtw_pre == same.dtw_post);
  CHECK(transfer_csv({row}).rfind(kTransferHeader, 0) == 0);
}
