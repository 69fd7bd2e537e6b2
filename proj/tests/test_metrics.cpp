#include <doctest.h>

#include <cmath>

#include "oracles/oracles.hpp"
#include "ssdg/errors.hpp"
#include "ssdg/metrics.hpp"
#include "ssdg/rng.hpp"

using namespace ssdg;

namespace {

std::vector<double> random_series(Rng& rng, std::size_t n) {
  std::vector<double> s(n);
  for (auto& v : s) v = rng.uniform(-2.0, 2.0);
  return s;
}

}  // namespace

TEST_CASE("dtw agrees with exhaustive path enumeration") {
  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    const auto a = random_series(rng, 1 + rng.below(8));
    const auto b = random_series(rng, 1 + rng.below(8));
    CHECK(metrics::dtw(a, b) == doctest::Approx(oracles::dtw_bruteforce(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("dtw properties") {
  Rng rng(12);
  for (int k = 0; k < 100; ++k) {
    const auto a = random_series(rng, 1 + rng.below(20));
    const auto b = random_series(rng, 1 + rng.below(20));
    CHECK(metrics::dtw(a, a) == 0.0);
    CHECK(std::abs(metrics::dtw(a, b) - metrics::dtw(b, a)) <= 1e-12);
    CHECK(metrics::dtw(a, b) >= 0.0);
  }
  const std::vector<double> one{1.0}, other{-0.5};
  CHECK(metrics::dtw(one, other) == 1.5);
  CHECK_THROWS_AS(metrics::dtw({}, one), DomainError);
}

TEST_CASE("normalized dtw") {
  Rng rng(13);
  const auto x = random_series(rng, 30);
  CHECK(metrics::normalized_dtw(x, x) == 0.0);
  // Parallel constant offset: every aligned step costs |d|.
  const double d = 0.25;
  std::vector<double> flat(17, 1.0), shifted(17, 1.0 + d);
  CHECK(metrics::normalized_dtw(flat, shifted) == doctest::Approx(d).epsilon(1e-12));
  CHECK(metrics::normalized_dtw(flat, shifted) == doctest::Approx(oracles::dtw_bruteforce(
                                                                      std::span(flat).first(6),
                                                                      std::span(shifted).first(6)) /
                                                                  6.0));
  CHECK_THROWS_AS(metrics::normalized_dtw(flat, std::vector<double>(3, 0.0)), DomainError);
}

TEST_CASE("confusion matrix and severe recall") {
  const std::vector<int> t{1, 2, 3, 4, 4, 4}, p{1, 2, 3, 4, 3, 4};
  const auto c = metrics::confusion_matrix(t, p);
  CHECK(c.counts[3][3] == 2);
  CHECK(c.counts[3][2] == 1);
  for (int k = 1; k <= 4; ++k) {
    std::size_t expected = 0;
    for (int v : t) expected += v == k ? 1 : 0;
    CHECK(c.row_total(k) == expected);
  }
  CHECK(c.rates[3][3] == doctest::Approx(2.0 / 3.0));
  CHECK(*metrics::severe_recall(t, p) == doctest::Approx(2.0 / 3.0));
  CHECK(*metrics::severe_recall(t, t) == 1.0);

  const std::vector<int> mild{1, 2, 3}, mild_pred{4, 4, 4};
  CHECK_FALSE(metrics::severe_recall(mild, mild_pred).has_value());
  const auto diag = metrics::confusion_matrix(mild, mild);
  CHECK(diag.counts[0][0] == 1);
  CHECK(diag.counts[0][1] == 0);
  const std::vector<int> single_t{4}, single_p{3};
  CHECK(metrics::confusion_matrix(single_t, single_p).counts[3][2] == 1);
  const std::vector<int> bad{5};
  CHECK_THROWS_AS(metrics::confusion_matrix(bad, bad), DomainError);
}

TEST_CASE("improvement percentage") {
  CHECK(std::round(metrics::improvement_pct(0.136, 0.122) * 100.0) / 100.0 == doctest::Approx(10.29));
  CHECK(std::round(metrics::improvement_pct(0.086, 0.06) * 100.0) / 100.0 == doctest::Approx(30.23));
  CHECK(metrics::improvement_pct(0.1, 0.1) == 0.0);
}
