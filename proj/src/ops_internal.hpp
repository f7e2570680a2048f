// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "agrgan/tensor.hpp"

namespace agrgan::ops::internal {

/// Gradient buffer of parent `i`, or nullptr if that parent is not tracked.
inline double* grad_of(detail::Node& self, std::size_t i) {
  detail::Node& parent = *self.parents[i];
  return parent.requires_grad ? parent.ensure_grad().data() : nullptr;
}

inline void softmax_rows(const double* z, std::size_t rows, std::size_t k, double* p) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* zr = z + r * k;
    double m = *std::max_element(zr, zr + k);
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      p[r * k + i] = std::exp(zr[i] - m);
      s += p[r * k + i];
    }
    for (std::size_t i = 0; i < k; ++i) p[r * k + i] /= s;
  }
}

}  // namespace agrgan::ops::internal
