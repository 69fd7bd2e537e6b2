#pragma once

#include <span>
#include <vector>

#include "ssdg/autodiff/tape.hpp"

namespace ssdg::ad {

enum class Activation { linear, relu };

/// LSTM over a batch of sequences, gate order (input, forget, cell, output).
///   input      [B x T x F]
///   kernel     [F x 4H]
///   recurrent  [H x 4H]
///   bias       [4H]
/// Returns the full hidden sequence [B x T x H]; initial h and c are zero.
Var lstm(Tape& tape, Var input, Var kernel, Var recurrent, Var bias);

/// Normalises each row over the last axis, then applies gain and shift ([H] each).
Var layer_norm(Tape& tape, Var input, Var gain, Var shift, double epsilon = 1e-5);

/// [B x T x H] -> [B x H], hidden state at the final step.
Var last_timestep(Tape& tape, Var input);

/// input [B x In], kernel [In x Out], bias [Out].
Var dense(Tape& tape, Var input, Var kernel, Var bias, Activation activation);

/// Identity forward; backward multiplies the upstream gradient by -lambda.
Var gradient_reversal(Tape& tape, Var input, double lambda);

/// Mean squared error, pred and target of equal element count; scalar result.
Var mse_loss(Tape& tape, Var pred, std::span<const double> target);

/// Mean softmax cross-entropy of logits [N x K] against class indices.
Var cross_entropy_loss(Tape& tape, Var logits, std::span<const int> labels);

/// coefficient * sum of squares over all given tensors.
Var l2_penalty(Tape& tape, std::span<const Var> params, double coefficient);

/// Squared derivative of mse(beta * pred, target) with respect to the scalar
/// beta, evaluated at `beta`. Its gradient with respect to pred is obtained by
/// differentiating the beta-adjoint computation itself, i.e. exact
/// second-order terms, while beta stays a constant.
Var invariance_penalty(Tape& tape, Var pred, std::span<const double> target, double beta = 1.0);

Var add(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var a, double factor);
/// Sum of equally shaped tensors.
Var sum(Tape& tape, std::span<const Var> terms);

}  // namespace ssdg::ad
