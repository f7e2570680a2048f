// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "agrgan/tensor.hpp"

// Differentiable primitives. Every function records its backward rule when
// grad mode is enabled and some input requires a gradient.
namespace agrgan::ops {

// Elementwise arithmetic. Binary ops require identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
/// 1 - a
Tensor one_minus(const Tensor& a);
Tensor abs(const Tensor& a);
/// log(max(a, floor)); the gradient is zero where the clamp is active.
Tensor log_clamped(const Tensor& a, double floor = 1e-12);

// Activations.
Tensor elu(const Tensor& a, double alpha = 1.0);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);

// Reductions to a scalar of shape [1].
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Σ w_i · a_i over scalar tensors; the weights are constants.
Tensor weighted_sum(std::span<const Tensor> terms, std::span<const double> weights);

// Shape manipulation.
Tensor reshape(const Tensor& a, Shape shape);
/// Concatenates along axis 1 (features for rank 2, channels for rank 4).
Tensor concat(const Tensor& a, const Tensor& b);

/// y = x·Wᵀ + b for x [B, in], W [out, in], b [out].
Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias);

/// Adds a per-channel bias [C] to an NCHW tensor.
Tensor bias_add(const Tensor& input, const Tensor& bias);

/// Cross-correlation. input [N, C, H, W], weight [O, C, k, k] -> [N, O, Ho, Wo]
/// with Ho = floor((H + 2·padding - k) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, std::size_t stride, std::size_t padding);

/// Transposed convolution, the adjoint of conv2d with the same weight tensor.
/// input [N, Cin, H, W], weight [Cin, Cout, k, k] -> [N, Cout, Ho, Wo] with
/// Ho = (H - 1)·stride - 2·padding + k + output_padding.
Tensor deconv2d(const Tensor& input, const Tensor& weight, std::size_t stride,
                std::size_t padding, std::size_t output_padding = 0);

/// Output padding that makes deconv2d produce exactly stride·H from H.
std::size_t doubling_output_padding(std::size_t kernel, std::size_t stride, std::size_t padding);

/// Mean over near-equal spatial partitions: cell i spans
/// [floor(i·H/Ho), ceil((i+1)·H/Ho)).
Tensor adaptive_avg_pool(const Tensor& input, std::size_t out_h, std::size_t out_w);

/// W / (uᵀ W v) with u, v held constant; W is read as a [rows, numel/rows] matrix.
Tensor spectral_divide(const Tensor& weight, std::span<const double> u, std::span<const double> v);

/// Row-wise softmax of a [B, K] tensor (not differentiable; for reporting).
std::vector<double> softmax_rows(const Tensor& logits);

/// Σ_i i · softmax(logits)_i per row: [B, K] -> [B].
Tensor expected_index(const Tensor& logits);

/// -log softmax(logits)[target] per row: [B, K] -> [B].
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets);

/// 1 - cos(a_i, b_i) per row of two [B, D] tensors; norms clamped at norm_floor.
Tensor cosine_distance_rows(const Tensor& a, const Tensor& b, double norm_floor = 1e-12);

/// Anisotropic total variation of an NCHW tensor, averaged over batch and
/// channels and divided by the pixel count H·W. Subgradient 0 at ties.
Tensor total_variation(const Tensor& input);

/// Tiles each entry of `labels` [N, K] into a constant H×W plane -> [N, K, H, W].
Tensor tile_planes(const Tensor& labels, std::size_t height, std::size_t width);

/// Inner product of two same-shape tensors (no gradient).
double dot(const Tensor& a, const Tensor& b);

}  // namespace agrgan::ops
