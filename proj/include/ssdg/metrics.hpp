#pragma once

#include <array>
#include <optional>
#include <span>

#include <json.hpp>

namespace ssdg::metrics {

/// Classic DTW with local cost |a_i - b_j|, full window.
/// Throws DomainError on empty input.
double dtw(std::span<const double> a, std::span<const double> b);

/// dtw(true, pred) divided by the number of sequences; inputs are the
/// chronological per-well SSI series. Length mismatch throws DomainError.
double normalized_dtw(std::span<const double> true_ssi, std::span<const double> pred_ssi);

double mse(std::span<const double> a, std::span<const double> b);

struct Confusion {
  std::array<std::array<std::size_t, 4>, 4> counts{};  // [true - 1][pred - 1]
  std::array<std::array<double, 4>, 4> rates{};        // row-normalised, 0 for empty rows

  std::size_t row_total(int true_class) const;
  nlohmann::json to_json() const;
};

/// Classes are 1..4; anything else throws DomainError.
Confusion confusion_matrix(std::span<const int> true_classes, std::span<const int> pred_classes);

/// Fraction of true class-4 samples predicted as class 4; empty without any.
std::optional<double> severe_recall(std::span<const int> true_classes, std::span<const int> pred_classes);

/// (reference - candidate) / reference * 100.
double improvement_pct(double reference, double candidate);

}  // namespace ssdg::metrics
