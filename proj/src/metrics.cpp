#include "ssdg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ssdg/errors.hpp"

namespace ssdg::metrics {

double dtw(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("dtw: empty series");
  const std::size_t m = b.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      const double best = std::min({prev[j], cur[j - 1], prev[j - 1]});
      cur[j] = std::abs(a[i - 1] - b[j - 1]) + best;
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double normalized_dtw(std::span<const double> true_ssi, std::span<const double> pred_ssi) {
  if (true_ssi.size() != pred_ssi.size())
    throw DomainError("normalized_dtw: length mismatch (" + std::to_string(true_ssi.size()) + " vs " +
                      std::to_string(pred_ssi.size()) + ")");
  if (true_ssi.empty()) throw DomainError("normalized_dtw: empty series");
  return dtw(true_ssi, pred_ssi) / static_cast<double>(true_ssi.size());
}

double mse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("mse: length mismatch");
  if (a.empty()) throw DomainError("mse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

std::size_t Confusion::row_total(int true_class) const {
  std::size_t n = 0;
  for (auto c : counts.at(static_cast<std::size_t>(true_class - 1))) n += c;
  return n;
}

nlohmann::json Confusion::to_json() const {
  return nlohmann::json{{"counts", counts}, {"rates", rates}};
}

Confusion confusion_matrix(std::span<const int> true_classes, std::span<const int> pred_classes) {
  if (true_classes.size() != pred_classes.size()) throw DomainError("confusion_matrix: length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < true_classes.size(); ++i) {
    const int t = true_classes[i], p = pred_classes[i];
    if (t < 1 || t > 4 || p < 1 || p > 4)
      throw DomainError("confusion_matrix: class outside 1..4 at index " + std::to_string(i));
    ++c.counts[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(p - 1)];
  }
  for (std::size_t r = 0; r < 4; ++r) {
    const auto total = c.row_total(static_cast<int>(r + 1));
    for (std::size_t k = 0; k < 4; ++k)
      c.rates[r][k] = total == 0 ? 0.0 : static_cast<double>(c.counts[r][k]) / static_cast<double>(total);
  }
  return c;
}

std::optional<double> severe_recall(std::span<const int> true_classes, std::span<const int> pred_classes) {
  if (true_classes.size() != pred_classes.size()) throw DomainError("severe_recall: length mismatch");
  std::size_t severe = 0, hit = 0;
  for (std::size_t i = 0; i < true_classes.size(); ++i) {
    if (true_classes[i] != 4) continue;
    ++severe;
    if (pred_classes[i] == 4) ++hit;
  }
  if (severe == 0) return std::nullopt;
  return static_cast<double>(hit) / static_cast<double>(severe);
}

double improvement_pct(double reference, double candidate) {
  if (reference == 0.0) throw DomainError("improvement_pct: zero reference");
  return (reference - candidate) / reference * 100.0;
}

}  // namespace ssdg::metrics
