// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agrgan/tensor.hpp"

namespace agrgan {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers for one parameter group.
class Adam {
 public:
  Adam(std::vector<NamedTensor> params, AdamConfig config);

  /// One bias-corrected Adam update from the parameters' current gradients.
  /// Parameters with no gradient are treated as having zero gradient. If any
  /// gradient is non-finite nothing is updated and NumericalError names the
  /// offending tensor.
  void step();
  void zero_grad();

  const std::vector<NamedTensor>& params() const { return params_; }
  const AdamConfig& config() const { return config_; }
  std::int64_t steps_taken() const { return t_; }

 private:
  std::vector<NamedTensor> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace agrgan
