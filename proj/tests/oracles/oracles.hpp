#pragma once

// Brute-force references for the test suite. Nothing here may be used by
// production code; they are deliberately naive.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace oracles {

/// Central differences per coordinate.
inline std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                       std::vector<double> point, double h = 1e-5) {
  std::vector<double> grad(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double keep = point[i];
    point[i] = keep + h;
    const double up = f(point);
    point[i] = keep - h;
    const double down = f(point);
    point[i] = keep;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

namespace detail {
inline void walk_paths(std::span<const double> a, std::span<const double> b, std::size_t i, std::size_t j,
                       double cost, double& best, std::size_t& count) {
  cost += std::abs(a[i] - b[j]);
  if (i + 1 == a.size() && j + 1 == b.size()) {
    best = std::min(best, cost);
    ++count;
    return;
  }
  if (i + 1 < a.size()) walk_paths(a, b, i + 1, j, cost, best, count);
  if (j + 1 < b.size()) walk_paths(a, b, i, j + 1, cost, best, count);
  if (i + 1 < a.size() && j + 1 < b.size()) walk_paths(a, b, i + 1, j + 1, cost, best, count);
}
}  // namespace detail

/// Minimum |a_i - b_j| path cost over every monotone warping path
/// (steps right, down, diagonal), by exhaustive enumeration.
inline double dtw_bruteforce(std::span<const double> a, std::span<const double> b,
                             std::size_t* path_count = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  detail::walk_paths(a, b, 0, 0, 0.0, best, count);
  if (path_count) *path_count = count;
  return best;
}

/// d/d(beta) of mean((beta * p - y)^2) at beta = 1, written out by hand.
inline double irm_beta_grad_closed_form(std::span<const double> pred, std::span<const double> target) {
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += pred[i] * (pred[i] - target[i]);
  return 2.0 * s / static_cast<double>(pred.size());
}

inline double irm_beta_grad_fd(std::span<const double> pred, std::span<const double> target, double h = 1e-6) {
  auto risk = [&](double beta) {
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (beta * pred[i] - target[i]) * (beta * pred[i] - target[i]);
    return s / static_cast<double>(pred.size());
  };
  return (risk(1.0 + h) - risk(1.0 - h)) / (2.0 * h);
}

/// (max - min) / mean by plain loops.
inline double ssi_direct(std::span<const double> w) {
  double lo = w[0], hi = w[0], sum = 0.0;
  for (double v : w) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
    sum += v;
  }
  return (hi - lo) / (sum / static_cast<double>(w.size()));
}

/// Parameter count of an LSTM+LN generator by walking its layer shapes:
/// LSTM(in -> H): kernel in x 4H, recurrent H x 4H, bias 4H; LN(H): gain H, shift H.
inline std::size_t shape_walk_parameter_count(int hidden_layer_count, std::size_t features, std::size_t units) {
  const std::size_t pairs = 1 + static_cast<std::size_t>(hidden_layer_count) / 2 + 1;
  std::size_t total = 0, in = features;
  for (std::size_t p = 0; p < pairs; ++p) {
    total += in * 4 * units;     // kernel
    total += units * 4 * units;  // recurrent
    total += 4 * units;          // bias
    total += 2 * units;          // layer norm
    in = units;
  }
  return total;
}

}  // namespace oracles
