// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agrgan/optim.hpp"
#include "agrgan/rng.hpp"
#include "agrgan/spectral_norm.hpp"
#include "agrgan/tensor.hpp"

// Layer building blocks shared by every network.
namespace agrgan::nn {

/// A mutable, named slot of model state: parameters and spectral-norm vectors.
/// Checkpoints are written and read through these views.
struct StateEntry {
  std::string name;
  Shape shape;
  std::span<double> values;
};

/// Uniform(-1/√fan_in, 1/√fan_in) initialization.
Tensor init_uniform(Shape shape, double fan_in, Rng& rng);

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
         std::size_t padding, bool spectral_norm, Rng& rng);

  /// Applies spectral normalization (when enabled) then conv + bias. In
  /// training mode the power iteration advances `power_iterations` steps.
  Tensor forward(const Tensor& x, bool training);

  /// The weight the forward pass actually uses: W/σ with the current u, v.
  Tensor effective_weight() const;
  /// One power iteration against the current weight (no-op without SN).
  void refresh_spectral_estimate();

  void collect_parameters(const std::string& prefix, std::vector<NamedTensor>& out) const;
  void collect_state(const std::string& prefix, std::vector<StateEntry>& out);

  Tensor weight, bias;
  std::optional<SpectralNormState> sn;
  std::size_t stride = 1, padding = 0;
  int power_iterations = 1;
};

class Deconv2d {
 public:
  Deconv2d() = default;
  Deconv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
           std::size_t padding, Rng& rng);

  Tensor forward(const Tensor& x) const;
  void collect_parameters(const std::string& prefix, std::vector<NamedTensor>& out) const;
  void collect_state(const std::string& prefix, std::vector<StateEntry>& out);

  Tensor weight, bias;
  std::size_t stride = 2, padding = 2, output_padding = 1;
};

class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in_features, std::size_t out_features, Rng& rng);

  Tensor forward(const Tensor& x) const;
  void collect_parameters(const std::string& prefix, std::vector<NamedTensor>& out) const;
  void collect_state(const std::string& prefix, std::vector<StateEntry>& out);

  Tensor weight, bias;
};

/// Flattens [N, ...] to [N, rest].
Tensor flatten(const Tensor& x);

/// Toggles requires_grad on every tensor in the list.
void set_trainable(const std::vector<NamedTensor>& params, bool trainable);
void zero_grad(const std::vector<NamedTensor>& params);

}  // namespace agrgan::nn
