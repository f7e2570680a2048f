// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include "agrgan/spectral_norm.hpp"

#include <Eigen/Core>
#include <Eigen/SVD>
#include <cmath>

#include "agrgan/errors.hpp"
#include "agrgan/ops.hpp"

namespace agrgan {
namespace {

using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMapR = Eigen::Map<const MatR>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

constexpr double kNormFloor = 1e-12;

CMapR as_matrix(const Tensor& weight) {
  std::size_t rows = weight.dim(0);
  return CMapR(weight.data().data(), rows, weight.numel() / rows);
}

}  // namespace

SpectralNormState SpectralNormState::for_weight(const Tensor& weight, Rng& rng) {
  std::size_t rows = weight.dim(0), cols = weight.numel() / rows;
  SpectralNormState state;
  state.u.resize(rows);
  for (double& x : state.u) x = rng.normal();
  VecMap u(state.u.data(), rows);
  u /= u.norm();
  state.v.assign(cols, 0.0);
  state.v[0] = 1.0;
  return state;
}

void power_iterate(const Tensor& weight, SpectralNormState& state, int iters) {
  if (iters < 1) throw ArgumentError("power_iterate: iters must be >= 1");
  auto w = as_matrix(weight);
  if (state.u.size() != static_cast<std::size_t>(w.rows()) ||
      state.v.size() != static_cast<std::size_t>(w.cols())) {
    throw DimensionError("power_iterate: state does not match weight " + shape_str(weight.shape()));
  }
  VecMap u(state.u.data(), w.rows()), v(state.v.data(), w.cols());
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd nv = w.transpose() * u;
    double nv_norm = nv.norm();
    if (nv_norm < kNormFloor) {
      warn("spectral norm: weight " + shape_str(weight.shape()) + " is zero, sigma clamped");
      state.sigma_estimate = kNormFloor;
      return;
    }
    v = nv / nv_norm;
    Eigen::VectorXd nu = w * v;
    u = nu / nu.norm();
  }
  state.sigma_estimate = u.dot(w * v);
}

Tensor spectral_normalize(const Tensor& weight, SpectralNormState& state, int iters) {
  power_iterate(weight, state, iters);
  if (state.sigma_estimate <= kNormFloor) return weight;
  return ops::spectral_divide(weight, state.u, state.v);
}

int power_iterate_to_convergence(const Tensor& weight, SpectralNormState& state, double tol, int max_iters) {
  double previous = 0.0;
  int used = 0;
  while (used < max_iters) {
    power_iterate(weight, state, 10);
    used += 10;
    if (state.sigma_estimate <= kNormFloor) break;
    if (std::abs(state.sigma_estimate - previous) <= tol * state.sigma_estimate) break;
    previous = state.sigma_estimate;
  }
  return used;
}

double largest_singular_value(const Tensor& weight) {
  auto w = as_matrix(weight);
  Eigen::BDCSVD<MatR> svd(w);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

}  // namespace agrgan
