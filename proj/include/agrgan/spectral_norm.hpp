// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "agrgan/rng.hpp"
#include "agrgan/tensor.hpp"

namespace agrgan {

/// Power-iteration state for one weight, persisted across training steps.
/// The weight is read as a matrix with rows = axis 0 and columns = the rest.
struct SpectralNormState {
  std::vector<double> u;  // length rows, unit norm
  std::vector<double> v;  // length cols, unit norm
  double sigma_estimate = 1.0;

  /// Random unit u; v is derived on the first iteration.
  static SpectralNormState for_weight(const Tensor& weight, Rng& rng);
};

/// Runs `iters` power-iteration steps on the weight matrix, updating state in
/// place and refreshing sigma_estimate = uᵀWv. A zero matrix leaves u, v as
/// they were and emits a warning.
void power_iterate(const Tensor& weight, SpectralNormState& state, int iters);

/// weight / sigma_estimate after `iters` power iterations. Differentiable in
/// the weight (u and v are treated as constants, σ is not).
Tensor spectral_normalize(const Tensor& weight, SpectralNormState& state, int iters);

/// Power iterations in blocks of ten until sigma_estimate changes by less than
/// tol (relative) or max_iters is reached. Returns the iterations used.
int power_iterate_to_convergence(const Tensor& weight, SpectralNormState& state, double tol = 1e-10,
                                 int max_iters = 5000);

/// Largest singular value of a weight read as a matrix, from a full SVD.
/// Used for verification, not training.
double largest_singular_value(const Tensor& weight);

}  // namespace agrgan
