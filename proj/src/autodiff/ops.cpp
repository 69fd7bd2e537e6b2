#include "ssdg/autodiff/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>

#include "ssdg/errors.hpp"

namespace ssdg::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using ConstRowMap = Eigen::Map<const Eigen::RowVectorXd>;

ConstMatMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatMap(t.values().data(), static_cast<Eigen::Index>(rows),
                     static_cast<Eigen::Index>(cols));
}

MatMap as_matrix(std::span<double> data, std::size_t rows, std::size_t cols) {
  return MatMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

ConstMatMap as_matrix(std::span<const double> data, std::size_t rows, std::size_t cols) {
  return ConstMatMap(data.data(), static_cast<Eigen::Index>(rows),
                     static_cast<Eigen::Index>(cols));
}

void expect_shape(const Tensor& t, const Shape& shape, const char* what) {
  if (t.shape() != shape) {
    throw ShapeError(std::string(what) + ": expected " + shape_string(shape) + ", got " +
                     shape_string(t.shape()));
  }
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct LstmCache {
  std::size_t batch = 0, steps = 0, features = 0, units = 0;
  std::vector<double> inputs;  // [T x B x F]
  std::vector<double> gates;   // [T x B x 4H], activated
  std::vector<double> cells;   // [T x B x H]
  std::vector<double> tanh_cells;
  std::vector<double> hidden;  // [T x B x H]
};

// Forward-mode number used to differentiate the beta-adjoint computation.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};
Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
Dual operator-(Dual a, double b) { return {a.v - b, a.d}; }
Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
Dual operator*(double a, Dual b) { return {a * b.v, a * b.d}; }

// Reverse sweep of loss(beta) = mean((beta * p - y)^2) with respect to beta:
//   r_k = beta * p_k - y_k,  rbar_k = 2 r_k / N,  betabar = sum_k rbar_k * p_k.
template <typename S>
S beta_adjoint(S beta, std::span<const S> pred, std::span<const double> target) {
  const double inv_n = 2.0 / static_cast<double>(pred.size());
  S acc{};
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const S residual = beta * pred[k] - target[k];
    const S residual_bar = inv_n * residual;
    acc = acc + residual_bar * pred[k];
  }
  return acc;
}

}  // namespace

Var lstm(Tape& tape, Var input, Var kernel, Var recurrent, Var bias) {
  const Tensor& x = tape.value(input);
  if (x.rank() != 3) throw ShapeError("lstm: input must be [B x T x F], got " + shape_string(x.shape()));
  const Tensor& w = tape.value(kernel);
  if (w.rank() != 2 || w.dim(1) % 4 != 0) throw ShapeError("lstm: kernel must be [F x 4H]");

  auto cache = std::make_shared<LstmCache>();
  cache->batch = x.dim(0);
  cache->steps = x.dim(1);
  cache->features = x.dim(2);
  cache->units = w.dim(1) / 4;
  const std::size_t B = cache->batch, T = cache->steps, F = cache->features, H = cache->units;
  expect_shape(w, {F, 4 * H}, "lstm kernel");
  expect_shape(tape.value(recurrent), {H, 4 * H}, "lstm recurrent");
  expect_shape(tape.value(bias), {4 * H}, "lstm bias");

  cache->inputs.resize(T * B * F);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t)
      std::copy_n((x.values().data() + ((b * T + t) * F)), F, &cache->inputs[(t * B + b) * F]);
  cache->gates.resize(T * B * 4 * H);
  cache->cells.resize(T * B * H);
  cache->tanh_cells.resize(T * B * H);
  cache->hidden.resize(T * B * H);

  const auto W = as_matrix(w, F, 4 * H);
  const auto U = as_matrix(tape.value(recurrent), H, 4 * H);
  const ConstRowMap bvec(tape.value(bias).values().data(), static_cast<Eigen::Index>(4 * H));

  RowMat z(B, 4 * H);
  for (std::size_t t = 0; t < T; ++t) {
    const auto xt = as_matrix(std::span<const double>(cache->inputs).subspan(t * B * F, B * F), B, F);
    z.noalias() = xt * W;
    if (t > 0) {
      const auto hprev =
          as_matrix(std::span<const double>(cache->hidden).subspan((t - 1) * B * H, B * H), B, H);
      z.noalias() += hprev * U;
    }
    z.rowwise() += bvec;
    for (std::size_t b = 0; b < B; ++b) {
      double* gate = &cache->gates[(t * B + b) * 4 * H];
      double* cell = &cache->cells[(t * B + b) * H];
      double* tcell = &cache->tanh_cells[(t * B + b) * H];
      double* hid = &cache->hidden[(t * B + b) * H];
      const double* cprev = t > 0 ? &cache->cells[((t - 1) * B + b) * H] : nullptr;
      for (std::size_t j = 0; j < H; ++j) {
        const double ig = sigmoid(z(b, j));
        const double fg = sigmoid(z(b, H + j));
        const double cg = std::tanh(z(b, 2 * H + j));
        const double og = sigmoid(z(b, 3 * H + j));
        gate[j] = ig;
        gate[H + j] = fg;
        gate[2 * H + j] = cg;
        gate[3 * H + j] = og;
        const double c = (cprev ? fg * cprev[j] : 0.0) + ig * cg;
        cell[j] = c;
        tcell[j] = std::tanh(c);
        hid[j] = og * tcell[j];
      }
    }
  }

  Tensor out({B, T, H});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t)
      std::copy_n(&cache->hidden[(t * B + b) * H], H, &out[(b * T + t) * H]);

  return tape.record(std::move(out), {input, kernel, recurrent, bias}, [cache](Tape::Context& ctx) {
    const std::size_t B = cache->batch, T = cache->steps, F = cache->features, H = cache->units;
    const auto up = ctx.upstream();
    const auto W = as_matrix(ctx.input(1), F, 4 * H);
    const auto U = as_matrix(ctx.input(2), H, 4 * H);
    const bool want_input = ctx.input_requires_grad(0);
    const bool want_params =
        ctx.input_requires_grad(1) || ctx.input_requires_grad(2) || ctx.input_requires_grad(3);

    RowMat dW = RowMat::Zero(F, 4 * H);
    RowMat dU = RowMat::Zero(H, 4 * H);
    Eigen::RowVectorXd db = Eigen::RowVectorXd::Zero(4 * H);
    RowMat dh_next = RowMat::Zero(B, H);
    RowMat dc_next = RowMat::Zero(B, H);
    RowMat dz(B, 4 * H);
    RowMat dx;
    std::span<double> input_grad;
    if (want_input) input_grad = ctx.input_gradient(0);

    for (std::size_t t = T; t-- > 0;) {
      for (std::size_t b = 0; b < B; ++b) {
        const double* gate = &cache->gates[(t * B + b) * 4 * H];
        const double* tcell = &cache->tanh_cells[(t * B + b) * H];
        const double* cprev = t > 0 ? &cache->cells[((t - 1) * B + b) * H] : nullptr;
        for (std::size_t j = 0; j < H; ++j) {
          const double dh = up[(b * T + t) * H + j] + dh_next(b, j);
          const double ig = gate[j], fg = gate[H + j], cg = gate[2 * H + j], og = gate[3 * H + j];
          const double dc = dh * og * (1.0 - tcell[j] * tcell[j]) + dc_next(b, j);
          const double dog = dh * tcell[j];
          dz(b, j) = dc * cg * ig * (1.0 - ig);
          dz(b, H + j) = (cprev ? dc * cprev[j] : 0.0) * fg * (1.0 - fg);
          dz(b, 2 * H + j) = dc * ig * (1.0 - cg * cg);
          dz(b, 3 * H + j) = dog * og * (1.0 - og);
          dc_next(b, j) = dc * fg;
        }
      }
      if (want_params) {
        const auto xt =
            as_matrix(std::span<const double>(cache->inputs).subspan(t * B * F, B * F), B, F);
        dW.noalias() += xt.transpose() * dz;
        if (t > 0) {
          const auto hprev = as_matrix(
              std::span<const double>(cache->hidden).subspan((t - 1) * B * H, B * H), B, H);
          dU.noalias() += hprev.transpose() * dz;
        }
        db += dz.colwise().sum();
      }
      dh_next.noalias() = dz * U.transpose();
      if (want_input) {
        dx.noalias() = dz * W.transpose();
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t f = 0; f < F; ++f) input_grad[(b * T + t) * F + f] += dx(b, f);
      }
    }
    if (ctx.input_requires_grad(1)) as_matrix(ctx.input_gradient(1), F, 4 * H) += dW;
    if (ctx.input_requires_grad(2)) as_matrix(ctx.input_gradient(2), H, 4 * H) += dU;
    if (ctx.input_requires_grad(3)) {
      auto g = ctx.input_gradient(3);
      for (std::size_t k = 0; k < 4 * H; ++k) g[k] += db(static_cast<Eigen::Index>(k));
    }
  });
}

Var layer_norm(Tape& tape, Var input, Var gain, Var shift, double epsilon) {
  const Tensor& x = tape.value(input);
  if (x.rank() < 1) throw ShapeError("layer_norm: input needs at least one axis");
  const std::size_t H = x.shape().back();
  if (H == 0) throw ShapeError("layer_norm: empty feature axis");
  expect_shape(tape.value(gain), {H}, "layer_norm gain");
  expect_shape(tape.value(shift), {H}, "layer_norm shift");
  const std::size_t rows = x.size() / H;

  auto normalized = std::make_shared<std::vector<double>>(x.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  const auto g = tape.value(gain).values();
  const auto s = tape.value(shift).values();
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = (x.values().data() + (r * H));
    double mean = 0.0;
    for (std::size_t j = 0; j < H; ++j) mean += row[j];
    mean /= static_cast<double>(H);
    double var = 0.0;
    for (std::size_t j = 0; j < H; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(H);
    const double inv = 1.0 / std::sqrt(var + epsilon);
    (*inv_std)[r] = inv;
    for (std::size_t j = 0; j < H; ++j) {
      const double xhat = (row[j] - mean) * inv;
      (*normalized)[r * H + j] = xhat;
      out[r * H + j] = g[j] * xhat + s[j];
    }
  }

  return tape.record(std::move(out), {input, gain, shift}, [normalized, inv_std, rows, H](Tape::Context& ctx) {
    const auto up = ctx.upstream();
    const auto g = ctx.input(1).values();
    if (ctx.input_requires_grad(1)) {
      auto dg = ctx.input_gradient(1);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < H; ++j) dg[j] += up[r * H + j] * (*normalized)[r * H + j];
    }
    if (ctx.input_requires_grad(2)) {
      auto ds = ctx.input_gradient(2);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < H; ++j) ds[j] += up[r * H + j];
    }
    if (ctx.input_requires_grad(0)) {
      auto dx = ctx.input_gradient(0);
      const double inv_h = 1.0 / static_cast<double>(H);
      for (std::size_t r = 0; r < rows; ++r) {
        double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
        for (std::size_t j = 0; j < H; ++j) {
          const double dxhat = up[r * H + j] * g[j];
          mean_dxhat += dxhat;
          mean_dxhat_xhat += dxhat * (*normalized)[r * H + j];
        }
        mean_dxhat *= inv_h;
        mean_dxhat_xhat *= inv_h;
        const double inv = (*inv_std)[r];
        for (std::size_t j = 0; j < H; ++j) {
          const double dxhat = up[r * H + j] * g[j];
          dx[r * H + j] += inv * (dxhat - mean_dxhat - (*normalized)[r * H + j] * mean_dxhat_xhat);
        }
      }
    }
  });
}

Var last_timestep(Tape& tape, Var input) {
  const Tensor& x = tape.value(input);
  if (x.rank() != 3) throw ShapeError("last_timestep: input must be [B x T x H]");
  const std::size_t B = x.dim(0), T = x.dim(1), H = x.dim(2);
  if (T == 0) throw ShapeError("last_timestep: empty sequence");
  Tensor out({B, H});
  for (std::size_t b = 0; b < B; ++b) std::copy_n((x.values().data() + ((b * T + T - 1) * H)), H, &out[b * H]);
  return tape.record(std::move(out), {input}, [B, T, H](Tape::Context& ctx) {
    const auto up = ctx.upstream();
    auto dx = ctx.input_gradient(0);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t j = 0; j < H; ++j) dx[(b * T + T - 1) * H + j] += up[b * H + j];
  });
}

Var dense(Tape& tape, Var input, Var kernel, Var bias, Activation activation) {
  const Tensor& x = tape.value(input);
  const Tensor& w = tape.value(kernel);
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0)) {
    throw ShapeError("dense: input " + shape_string(x.shape()) + " incompatible with kernel " +
                     shape_string(w.shape()));
  }
  const std::size_t B = x.dim(0), In = w.dim(0), Out = w.dim(1);
  expect_shape(tape.value(bias), {Out}, "dense bias");

  Tensor out({B, Out});
  auto y = as_matrix(out.values(), B, Out);
  y.noalias() = as_matrix(x, B, In) * as_matrix(w, In, Out);
  y.rowwise() += ConstRowMap(tape.value(bias).values().data(), static_cast<Eigen::Index>(Out));
  if (activation == Activation::relu) y = y.cwiseMax(0.0);

  return tape.record(std::move(out), {input, kernel, bias}, [B, In, Out, activation](Tape::Context& ctx) {
    RowMat dpre = as_matrix(ctx.upstream(), B, Out);
    if (activation == Activation::relu) {
      const auto y = as_matrix(ctx.output(), B, Out);
      dpre = (y.array() > 0.0).select(dpre, 0.0);
    }
    if (ctx.input_requires_grad(1))
      as_matrix(ctx.input_gradient(1), In, Out).noalias() += as_matrix(ctx.input(0), B, In).transpose() * dpre;
    if (ctx.input_requires_grad(2)) {
      auto db = ctx.input_gradient(2);
      const Eigen::RowVectorXd sums = dpre.colwise().sum();
      for (std::size_t k = 0; k < Out; ++k) db[k] += sums(static_cast<Eigen::Index>(k));
    }
    if (ctx.input_requires_grad(0))
      as_matrix(ctx.input_gradient(0), B, In).noalias() += dpre * as_matrix(ctx.input(1), In, Out).transpose();
  });
}

Var gradient_reversal(Tape& tape, Var input, double lambda) {
  Tensor out = tape.value(input);
  out.drop_gradient();
  return tape.record(std::move(out), {input}, [lambda](Tape::Context& ctx) {
    const auto up = ctx.upstream();
    auto dx = ctx.input_gradient(0);
    const double factor = -lambda;
    for (std::size_t i = 0; i < up.size(); ++i) dx[i] += factor * up[i];
  });
}

Var mse_loss(Tape& tape, Var pred, std::span<const double> target) {
  const Tensor& p = tape.value(pred);
  if (p.size() != target.size() || p.size() == 0) {
    throw ShapeError("mse_loss: " + std::to_string(p.size()) + " predictions vs " +
                     std::to_string(target.size()) + " targets");
  }
  const std::size_t n = p.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += (p[i] - target[i]) * (p[i] - target[i]);
  std::vector<double> y(target.begin(), target.end());
  return tape.record(Tensor::scalar(total / static_cast<double>(n)), {pred},
                     [y = std::move(y), n](Tape::Context& ctx) {
                       const double up = ctx.upstream()[0];
                       const auto p = ctx.input(0).values();
                       auto dp = ctx.input_gradient(0);
                       const double factor = 2.0 * up / static_cast<double>(n);
                       for (std::size_t i = 0; i < n; ++i) dp[i] += factor * (p[i] - y[i]);
                     });
}

Var cross_entropy_loss(Tape& tape, Var logits, std::span<const int> labels) {
  const Tensor& z = tape.value(logits);
  if (z.rank() != 2 || z.dim(0) != labels.size() || z.dim(0) == 0) {
    throw ShapeError("cross_entropy_loss: logits " + shape_string(z.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t N = z.dim(0), K = z.dim(1);
  auto probs = std::make_shared<std::vector<double>>(N * K);
  double total = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    if (labels[n] < 0 || static_cast<std::size_t>(labels[n]) >= K) {
      throw DomainError("cross_entropy_loss: label " + std::to_string(labels[n]) +
                        " outside [0, " + std::to_string(K) + ")");
    }
    const double* row = (z.values().data() + (n * K));
    const double peak = *std::max_element(row, row + K);
    double denom = 0.0;
    for (std::size_t k = 0; k < K; ++k) denom += std::exp(row[k] - peak);
    const double log_denom = std::log(denom);
    for (std::size_t k = 0; k < K; ++k) (*probs)[n * K + k] = std::exp(row[k] - peak - log_denom);
    total -= row[static_cast<std::size_t>(labels[n])] - peak - log_denom;
  }
  std::vector<int> y(labels.begin(), labels.end());
  return tape.record(Tensor::scalar(total / static_cast<double>(N)), {logits},
                     [probs, y = std::move(y), N, K](Tape::Context& ctx) {
                       const double factor = ctx.upstream()[0] / static_cast<double>(N);
                       auto dz = ctx.input_gradient(0);
                       for (std::size_t n = 0; n < N; ++n) {
                         for (std::size_t k = 0; k < K; ++k) {
                           const double target = static_cast<int>(k) == y[n] ? 1.0 : 0.0;
                           dz[n * K + k] += factor * ((*probs)[n * K + k] - target);
                         }
                       }
                     });
}

Var l2_penalty(Tape& tape, std::span<const Var> params, double coefficient) {
  double total = 0.0;
  for (const Var& p : params)
    for (const double v : tape.value(p).values()) total += v * v;
  std::vector<Var> inputs(params.begin(), params.end());
  return tape.record(Tensor::scalar(coefficient * total), inputs, [coefficient](Tape::Context& ctx) {
    const double factor = 2.0 * coefficient * ctx.upstream()[0];
    for (std::size_t i = 0; i < ctx.input_count(); ++i) {
      if (!ctx.input_requires_grad(i)) continue;
      const auto v = ctx.input(i).values();
      auto g = ctx.input_gradient(i);
      for (std::size_t k = 0; k < v.size(); ++k) g[k] += factor * v[k];
    }
  });
}

Var invariance_penalty(Tape& tape, Var pred, std::span<const double> target, double beta) {
  const Tensor& p = tape.value(pred);
  if (p.size() != target.size() || p.size() == 0) {
    throw ShapeError("invariance_penalty: prediction/target size mismatch");
  }
  const double g = beta_adjoint<double>(beta, p.values(), target);
  std::vector<double> y(target.begin(), target.end());
  return tape.record(Tensor::scalar(g * g), {pred}, [y = std::move(y), beta, g](Tape::Context& ctx) {
    const auto p = ctx.input(0).values();
    const std::size_t n = p.size();
    auto dp = ctx.input_gradient(0);
    std::vector<Dual> seeded(n);
    for (std::size_t k = 0; k < n; ++k) seeded[k] = {p[k], 0.0};
    const double outer = 2.0 * g * ctx.upstream()[0];
    for (std::size_t j = 0; j < n; ++j) {
      seeded[j].d = 1.0;
      const Dual dg = beta_adjoint<Dual>(Dual{beta, 0.0}, seeded, y);
      seeded[j].d = 0.0;
      dp[j] += outer * dg.d;
    }
  });
}

Var add(Tape& tape, Var a, Var b) {
  const Tensor& x = tape.value(a);
  const Tensor& y = tape.value(b);
  if (x.shape() != y.shape()) throw ShapeError("add: shape mismatch");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return tape.record(std::move(out), {a, b}, [](Tape::Context& ctx) {
    const auto up = ctx.upstream();
    for (std::size_t in = 0; in < 2; ++in) {
      if (!ctx.input_requires_grad(in)) continue;
      auto g = ctx.input_gradient(in);
      for (std::size_t i = 0; i < up.size(); ++i) g[i] += up[i];
    }
  });
}

Var scale(Tape& tape, Var a, double factor) {
  Tensor out = tape.value(a);
  out.drop_gradient();
  for (double& v : out.values()) v *= factor;
  return tape.record(std::move(out), {a}, [factor](Tape::Context& ctx) {
    const auto up = ctx.upstream();
    auto g = ctx.input_gradient(0);
    for (std::size_t i = 0; i < up.size(); ++i) g[i] += factor * up[i];
  });
}

Var sum(Tape& tape, std::span<const Var> terms) {
  if (terms.empty()) throw ShapeError("sum: no terms");
  const Shape& shape = tape.value(terms.front()).shape();
  Tensor out(shape);
  for (const Var& t : terms) {
    const Tensor& v = tape.value(t);
    if (v.shape() != shape) throw ShapeError("sum: shape mismatch");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  std::vector<Var> inputs(terms.begin(), terms.end());
  return tape.record(std::move(out), inputs, [](Tape::Context& ctx) {
    const auto up = ctx.upstream();
    for (std::size_t in = 0; in < ctx.input_count(); ++in) {
      if (!ctx.input_requires_grad(in)) continue;
      auto g = ctx.input_gradient(in);
      for (std::size_t i = 0; i < up.size(); ++i) g[i] += up[i];
    }
  });
}

}  // namespace ssdg::ad
