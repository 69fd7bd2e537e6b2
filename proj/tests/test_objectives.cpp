#include <doctest.h>

#include <cmath>

#include "oracles/oracles.hpp"
#include "ssdg/errors.hpp"
#include "ssdg/objectives.hpp"
#include "support/fixtures.hpp"

using namespace ssdg;
using namespace ssdg::objectives;
using models::ModelBundle;
using models::ModelKind;

namespace {

constexpr double kTolerance = 1e-4;
constexpr int kConfigs = 20;

bool in_group(const ad::Parameter& p, const char* group) { return p.group == group; }

std::vector<std::vector<double>> gradients(const ModelBundle& b, const char* group) {
  std::vector<std::vector<double>> out;
  for (const auto& p : b.params)
    if (in_group(p, group)) out.emplace_back(p.tensor.gradient().begin(), p.tensor.gradient().end());
  return out;
}

Batch slice(const Batch& b, int domain) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b.domains[i] == domain) rows.push_back(i);
  const std::size_t T = b.features.dim(1), F = b.features.dim(2);
  Batch out;
  out.features = ad::Tensor({rows.size(), T, F});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < T * F; ++k) out.features[r * T * F + k] = b.features[rows[r] * T * F + k];
    out.targets.push_back(b.targets[rows[r]]);
    out.domains.push_back(domain);
  }
  return out;
}

ad::Tensor cloud(Rng& rng, std::size_t n, std::size_t d, double shift) {
  ad::Tensor t({n, d});
  for (auto& v : t.values()) v = rng.normal() + shift;
  return t;
}

}  // namespace

TEST_CASE("adg total gradient check") {
  for (int c = 0; c < kConfigs; ++c) {
    Rng rng(c, 31);
    const std::size_t domains = 2 + rng.below(2);
    auto bundle = fixtures::tiny_bundle(ModelKind::adg, c, domains, 2 + rng.below(2));
    const auto batch = fixtures::random_batch(rng, 2 + rng.below(3), 2 + rng.below(3), domains);
    const double lambda = rng.uniform(0.0, 3.0);
    auto run = [&](ModelBundle& b) { return adg_loss(b, batch, lambda).total; };
    // theta_C and theta_SSI descend the plain total; theta_G sees the
    // classifier term through the reversal.
    const double heads_err = fixtures::bundle_gradient_check(bundle, run, run, [](const ad::Parameter& p) {
      return p.group != models::kGeneratorGroup;
    });
    const double gen_err = fixtures::bundle_gradient_check(
        bundle, run,
        [&](ModelBundle& b) {
          const auto l = adg_loss(b, batch, lambda);
          return l.ssi_mse + l.l2 - lambda * *l.domain_ce;
        },
        [](const ad::Parameter& p) { return p.group == models::kGeneratorGroup; });
    CHECK(heads_err < kTolerance);
    CHECK(gen_err < kTolerance);
  }
}

TEST_CASE("irm total gradient check including the penalty term") {
  for (int c = 0; c < kConfigs; ++c) {
    Rng rng(c, 32);
    auto bundle = fixtures::tiny_bundle(ModelKind::irm, c, 2, 2 + rng.below(2));
    std::vector<Batch> batches;
    const std::size_t domains = 2 + rng.below(2);
    for (std::size_t d = 0; d < domains; ++d) batches.push_back(fixtures::random_batch(rng, 2 + rng.below(3), 3, 1));
    const double alpha = rng.uniform(0.5, 5.0);
    auto run = [&](ModelBundle& b) { return irm_loss(b, batches, alpha).total; };
    CHECK(fixtures::bundle_gradient_check(bundle, run, run, [](const ad::Parameter&) { return true; }) < kTolerance);
  }
}

TEST_CASE("erm total gradient check") {
  for (int c = 0; c < 5; ++c) {
    Rng rng(c, 33);
    auto bundle = fixtures::tiny_bundle(ModelKind::baseline, c);
    const auto batch = fixtures::random_batch(rng, 3, 3, 1);
    auto run = [&](ModelBundle& b) { return erm_loss(b, batch).total; };
    CHECK(fixtures::bundle_gradient_check(bundle, run, run, [](const ad::Parameter&) { return true; }) < kTolerance);
  }
}

TEST_CASE("loss breakdown sums to the total") {
  Rng rng(5, 34);
  const auto batch = fixtures::random_batch(rng, 6, 4, 3);
  auto adg = fixtures::tiny_bundle(ModelKind::adg, 5, 3);
  const auto a = adg_loss(adg, batch, 10.0);
  CHECK(std::abs(a.total - (a.ssi_mse + *a.domain_ce + a.l2)) <= 1e-12);
  CHECK(a.penalty_weight == 10.0);
  CHECK(a.l2 > 0.0);

  auto irm = fixtures::tiny_bundle(ModelKind::irm, 5, 3);
  const std::vector<Batch> parts{slice(batch, 0), slice(batch, 1), slice(batch, 2)};
  const auto i = irm_loss(irm, parts, 2.5);
  CHECK(std::abs(i.total - (i.ssi_mse + 2.5 * *i.irm_penalty + i.l2)) <= 1e-12);
  CHECK(*i.irm_penalty >= 0.0);

  auto base = fixtures::tiny_bundle(ModelKind::baseline, 5);
  const auto e = erm_loss(base, batch);
  CHECK(std::abs(e.total - (e.ssi_mse + e.l2)) <= 1e-12);
  CHECK_FALSE(e.domain_ce.has_value());
}

TEST_CASE("adg with lambda 0 and irm with alpha 0 reduce to erm bitwise") {
  for (int c = 0; c < 10; ++c) {
    Rng rng(c, 35);
    const auto batch = fixtures::random_batch(rng, 5, 4, 3);

    auto adg = fixtures::tiny_bundle(ModelKind::adg, c, 3);
    auto adg_ref = adg;
    adg_loss(adg, batch, 0.0);
    erm_loss(adg_ref, batch);
    CHECK(gradients(adg, models::kGeneratorGroup) == gradients(adg_ref, models::kGeneratorGroup));
    CHECK(gradients(adg, models::kSsiGroup) == gradients(adg_ref, models::kSsiGroup));

    auto irm = fixtures::tiny_bundle(ModelKind::irm, c, 3);
    auto irm_ref = irm;
    const std::vector<Batch> one{batch};
    const auto li = irm_loss(irm, one, 0.0);
    const auto le = erm_loss(irm_ref, batch);
    CHECK(li.total == le.total);
    CHECK(gradients(irm, models::kGeneratorGroup) == gradients(irm_ref, models::kGeneratorGroup));
    CHECK(gradients(irm, models::kSsiGroup) == gradients(irm_ref, models::kSsiGroup));
  }
}

TEST_CASE("invariance penalty matches the beta-gradient oracles") {
  for (int c = 0; c < 50; ++c) {
    Rng rng(c, 36);
    const std::size_t n = 1 + rng.below(20);
    ad::Tensor pred({n, 1});
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng.uniform(-2.0, 2.0);
      y[i] = rng.uniform(-2.0, 2.0);
    }
    ad::Tape tape;
    const double pen = tape.value(ad::invariance_penalty(tape, tape.leaf(pred), y)).item();
    const double closed = oracles::irm_beta_grad_closed_form(pred.values(), y);
    const double fd = oracles::irm_beta_grad_fd(pred.values(), y);
    CHECK(std::abs(pen - closed * closed) <= 1e-8 * std::max(1.0, pen));
    CHECK(std::abs(pen - fd * fd) <= 1e-8 * std::max(1.0, pen));
  }
}

TEST_CASE("irm penalty vanishes for per-domain optimal predictors") {
  auto bundle = fixtures::tiny_bundle(ModelKind::irm, 1, 2);
  for (auto& p : bundle.params)
    if (p.group == models::kSsiGroup) std::fill(p.tensor.values().begin(), p.tensor.values().end(), 0.0);
  bundle.params.at("ssi_head/dense1/bias").tensor[0] = 0.6;
  Rng rng(1, 37);
  std::vector<Batch> parts{fixtures::random_batch(rng, 4, 3, 1), fixtures::random_batch(rng, 5, 3, 1)};
  for (auto& b : parts) std::fill(b.targets.begin(), b.targets.end(), 0.6);
  const auto l = irm_loss(bundle, parts, 100.0);
  CHECK(*l.irm_penalty == 0.0);
  CHECK(l.ssi_mse == 0.0);
}

TEST_CASE("objective preconditions") {
  Rng rng(2, 38);
  auto batch = fixtures::random_batch(rng, 4, 3, 1);
  auto adg = fixtures::tiny_bundle(ModelKind::adg, 2, 2);
  const auto single = adg_loss(adg, batch, 1.0);
  REQUIRE(single.warnings.size() == 1);
  CHECK(single.warnings[0].find("single domain") != std::string::npos);

  batch.domains[2] = -1;
  CHECK_THROWS_AS(adg_loss(adg, batch, 1.0), ConfigError);
  auto base = fixtures::tiny_bundle(ModelKind::baseline, 2);
  CHECK_THROWS_AS(adg_loss(base, batch, 1.0), ConfigError);

  auto irm = fixtures::tiny_bundle(ModelKind::irm, 2);
  std::vector<Batch> parts{fixtures::random_batch(rng, 3, 3, 1), Batch{}};
  const auto l = irm_loss(irm, parts, 1.0);
  CHECK(l.warnings.size() == 1);
  CHECK_THROWS_AS(irm_loss(base, parts, 1.0), ConfigError);
}

TEST_CASE("h-divergence on synthetic clouds") {
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed, 39);
    ProbeOptions opt;
    opt.seed = seed;
    const double same = estimate_h_divergence(cloud(rng, 2000, 4, 0.0), cloud(rng, 2000, 4, 0.0), opt);
    CHECK(same >= -0.1);
    CHECK(same <= 0.1);
    const double apart = estimate_h_divergence(cloud(rng, 2000, 4, 0.0), cloud(rng, 2000, 4, 10.0), opt);
    CHECK(apart >= 0.9);
  }
  Rng rng(4, 39);
  CHECK_THROWS_AS(estimate_h_divergence(cloud(rng, 9, 2, 0.0), cloud(rng, 50, 2, 0.0)), InsufficientDataError);
}
