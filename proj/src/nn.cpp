// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include "agrgan/nn.hpp"

#include <cmath>

#include "agrgan/ops.hpp"

namespace agrgan::nn {

Tensor init_uniform(Shape shape, double fan_in, Rng& rng) {
  double bound = 1.0 / std::sqrt(fan_in);
  std::vector<double> data(shape_numel(shape));
  for (double& x : data) x = rng.uniform(-bound, bound);
  return Tensor::from_data(std::move(shape), std::move(data), true);
}

namespace {

void add_param(std::vector<StateEntry>& out, const std::string& name, Tensor& t) {
  out.push_back({name, t.shape(), t.mutable_data()});
}

}  // namespace

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               std::size_t stride_, std::size_t padding_, bool spectral_norm, Rng& rng)
    : stride(stride_), padding(padding_) {
  double fan_in = static_cast<double>(in_channels * kernel * kernel);
  weight = init_uniform({out_channels, in_channels, kernel, kernel}, fan_in, rng);
  bias = init_uniform({out_channels}, fan_in, rng);
  if (spectral_norm) {
    sn = SpectralNormState::for_weight(weight, rng);
    // Converged once here so training starts from an accurate sigma.
    power_iterate_to_convergence(weight, *sn);
  }
}

Tensor Conv2d::forward(const Tensor& x, bool training) {
  Tensor w = weight;
  if (sn) {
    if (training) power_iterate(weight, *sn, power_iterations);
    w = ops::spectral_divide(weight, sn->u, sn->v);
  }
  return ops::bias_add(ops::conv2d(x, w, stride, padding), bias);
}

Tensor Conv2d::effective_weight() const {
  NoGradGuard no_grad;
  if (!sn) return weight.detach();
  return ops::spectral_divide(weight, sn->u, sn->v);
}

void Conv2d::refresh_spectral_estimate() {
  if (sn) power_iterate(weight, *sn, power_iterations);
}

void Conv2d::collect_parameters(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

void Conv2d::collect_state(const std::string& prefix, std::vector<StateEntry>& out) {
  add_param(out, prefix + ".weight", weight);
  add_param(out, prefix + ".bias", bias);
  if (sn) {
    out.push_back({prefix + ".sn_u", {sn->u.size()}, sn->u});
    out.push_back({prefix + ".sn_v", {sn->v.size()}, sn->v});
  }
}

Deconv2d::Deconv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                   std::size_t stride_, std::size_t padding_, Rng& rng)
    : stride(stride_), padding(padding_),
      output_padding(ops::doubling_output_padding(kernel, stride_, padding_)) {
  // Each output pixel receives about in_channels·k²/stride² input taps.
  double fan_in = static_cast<double>(in_channels * kernel * kernel) / static_cast<double>(stride * stride);
  weight = init_uniform({in_channels, out_channels, kernel, kernel}, fan_in, rng);
  bias = init_uniform({out_channels}, fan_in, rng);
}

Tensor Deconv2d::forward(const Tensor& x) const {
  return ops::bias_add(ops::deconv2d(x, weight, stride, padding, output_padding), bias);
}

void Deconv2d::collect_parameters(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

void Deconv2d::collect_state(const std::string& prefix, std::vector<StateEntry>& out) {
  add_param(out, prefix + ".weight", weight);
  add_param(out, prefix + ".bias", bias);
}

Linear::Linear(std::size_t in_features, std::size_t out_features, Rng& rng) {
  double fan_in = static_cast<double>(in_features);
  weight = init_uniform({out_features, in_features}, fan_in, rng);
  bias = init_uniform({out_features}, fan_in, rng);
}

Tensor Linear::forward(const Tensor& x) const { return ops::fully_connected(x, weight, bias); }

void Linear::collect_parameters(const std::string& prefix, std::vector<NamedTensor>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

void Linear::collect_state(const std::string& prefix, std::vector<StateEntry>& out) {
  add_param(out, prefix + ".weight", weight);
  add_param(out, prefix + ".bias", bias);
}

Tensor flatten(const Tensor& x) {
  std::size_t n = x.dim(0);
  return ops::reshape(x, {n, x.numel() / n});
}

void set_trainable(const std::vector<NamedTensor>& params, bool trainable) {
  for (const auto& p : params) {
    Tensor handle = p.tensor;
    handle.set_requires_grad(trainable);
  }
}

void zero_grad(const std::vector<NamedTensor>& params) {
  for (const auto& p : params) {
    Tensor handle = p.tensor;
    handle.zero_grad();
  }
}

}  // namespace agrgan::nn
