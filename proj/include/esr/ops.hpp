// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Differentiable layer kernels. Every op takes its operands as graph
// values, records an adjoint on the tape and returns the output value.
// Image tensors are NCHW, row-major.

#include "esr/autograd.hpp"

#include <span>

namespace esr {

enum class Mode { Train, Eval };

/// Output extent of a sliding window: floor((n + 2*padding - kernel)/stride) + 1.
inline Index window_output_extent(Index n, Index kernel, Index stride, Index padding) {
  return (n + 2 * padding - kernel) / stride + 1;
}

/// Running mean/variance carried by a batch-norm layer between calls.
template <typename Scalar>
struct BatchNormStats {
  using Vector = typename Tensor<Scalar>::Vector;
  Vector mean;
  Vector var;

  BatchNormStats() = default;
  explicit BatchNormStats(Index channels)
      : mean(Vector::Zero(channels)), var(Vector::Ones(channels)) {}
};

inline constexpr double kBatchNormMomentum = 0.1;
inline constexpr double kBatchNormEpsilon = 1e-5;

template <typename Scalar>
Var<Scalar> conv2d(Tape<Scalar>& tape, const Var<Scalar>& input, const Var<Scalar>& weight,
                   const Var<Scalar>& bias, int stride, int padding);

/// Train mode normalizes with biased batch statistics and folds the
/// unbiased variance into the running estimate; eval mode reads it.
template <typename Scalar>
Var<Scalar> batchnorm2d(Tape<Scalar>& tape, const Var<Scalar>& input, const Var<Scalar>& gamma,
                        const Var<Scalar>& beta, BatchNormStats<Scalar>& stats, Mode mode,
                        double momentum = kBatchNormMomentum,
                        double epsilon = kBatchNormEpsilon);

/// Backward routes each window's gradient to its first maximal element.
template <typename Scalar>
Var<Scalar> maxpool2d(Tape<Scalar>& tape, const Var<Scalar>& input, int kernel, int stride);

template <typename Scalar>
Var<Scalar> global_avg_pool(Tape<Scalar>& tape, const Var<Scalar>& input);

/// y = x W^T + b with x: N x F, W: O x F, b: O.
template <typename Scalar>
Var<Scalar> linear(Tape<Scalar>& tape, const Var<Scalar>& input, const Var<Scalar>& weight,
                   const Var<Scalar>& bias);

template <typename Scalar>
Var<Scalar> relu(Tape<Scalar>& tape, const Var<Scalar>& input);

/// Batch mean of -log softmax(logits)[label].
template <typename Scalar>
Var<Scalar> softmax_cross_entropy(Tape<Scalar>& tape, const Var<Scalar>& logits,
                                  std::span<const int> labels);

/// sqrt(mean((pred - target)^2)). At zero error the gradient is defined as zero.
template <typename Scalar>
Var<Scalar> rmse_loss(Tape<Scalar>& tape, const Var<Scalar>& pred, const Tensor<Scalar>& target);

/// Elementwise sum of same-shape values.
template <typename Scalar>
Var<Scalar> add(Tape<Scalar>& tape, std::span<const Var<Scalar>> terms);

/// Scalar sum over the batch of logits[:, column].
template <typename Scalar>
Var<Scalar> pick_column(Tape<Scalar>& tape, const Var<Scalar>& logits, Index column);

/// Row-wise softmax of an N x C tensor; no graph involvement.
template <typename Scalar>
Tensor<Scalar> softmax_rows(const Tensor<Scalar>& logits);

}  // namespace esr
