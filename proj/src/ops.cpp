// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "agrgan/errors.hpp"
#include "agrgan/ops.hpp"
#include "ops_internal.hpp"

namespace agrgan::ops {

using detail::Node;
using internal::grad_of;

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape " + shape_str(a.shape()) +
                         " does not match " + shape_str(b.shape()));
  }
}

// y_i = f(x_i); dy/dx is computed from (x_i, y_i).
template <typename F, typename D>
Tensor unary(const Tensor& a, F f, D derivative) {
  auto x = a.data();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return detail::make_result(a.shape(), std::move(y), {a}, [derivative](Node& self) {
    double* ga = grad_of(self, 0);
    if (!ga) return;
    const auto& xs = self.parents[0]->data;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      ga[i] += self.grad[i] * derivative(xs[i], self.data[i]);
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (double* g = grad_of(self, k)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (double* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (double* g = grad_of(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& xs = self.parents[0]->data;
    const auto& ys = self.parents[1]->data;
    if (double* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < xs.size(); ++i) g[i] += self.grad[i] * ys[i];
    }
    if (double* g = grad_of(self, 1)) {
      for (std::size_t i = 0; i < xs.size(); ++i) g[i] += self.grad[i] * xs[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return factor * x; },
               [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary(a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Tensor one_minus(const Tensor& a) {
  return unary(a, [](double x) { return 1.0 - x; }, [](double, double) { return -1.0; });
}

Tensor abs(const Tensor& a) {
  return unary(a, [](double x) { return std::abs(x); },
               [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor log_clamped(const Tensor& a, double floor) {
  return unary(a, [floor](double x) { return std::log(std::max(x, floor)); },
               [floor](double x, double) { return x > floor ? 1.0 / x : 0.0; });
}

Tensor elu(const Tensor& a, double alpha) {
  return unary(a, [alpha](double x) { return x >= 0.0 ? x : alpha * std::expm1(x); },
               [alpha](double x, double y) { return x >= 0.0 ? 1.0 : y + alpha; });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(a,
               [](double x) {
                 if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
                 double e = std::exp(x);
                 return e / (1.0 + e);
               },
               [](double, double y) { return y * (1.0 - y); });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double x : a.data()) total += x;
  return detail::make_result({1}, {total}, {a}, [](Node& self) {
    if (double* g = grad_of(self, 0)) {
      std::size_t n = self.parents[0]->data.size();
      for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor weighted_sum(std::span<const Tensor> terms, std::span<const double> weights) {
  if (terms.size() != weights.size() || terms.empty()) {
    throw ArgumentError("weighted_sum: need one weight per term");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) total += weights[k] * terms[k].item();
  auto node_out = Tensor::scalar(total);
  if (!grad_mode_enabled()) return node_out;
  bool any = std::any_of(terms.begin(), terms.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (!any) return node_out;
  auto& node = *node_out.node();
  node.requires_grad = true;
  for (const Tensor& t : terms) node.parents.push_back(t.node());
  std::vector<double> w(weights.begin(), weights.end());
  node.backward = [w](Node& self) {
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (double* g = grad_of(self, k)) g[0] += w[k] * self.grad[0];
    }
  };
  return node_out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                         shape_str(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return detail::make_result(std::move(shape), std::move(out), {a}, [](Node& self) {
    if (double* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || a.rank() < 2) {
    throw DimensionError("concat: ranks " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  for (std::size_t axis = 0; axis < a.rank(); ++axis) {
    if (axis != 1 && a.dim(axis) != b.dim(axis)) {
      throw DimensionError("concat: axis " + std::to_string(axis) + " differs (" +
                           shape_str(a.shape()) + " vs " + shape_str(b.shape()) + ")");
    }
  }
  std::size_t batch = a.dim(0);
  std::size_t chunk_a = a.numel() / batch;
  std::size_t chunk_b = b.numel() / batch;
  Shape shape = a.shape();
  shape[1] += b.dim(1);
  std::vector<double> out(a.numel() + b.numel());
  auto xa = a.data(), xb = b.data();
  for (std::size_t n = 0; n < batch; ++n) {
    std::copy_n(xa.begin() + n * chunk_a, chunk_a, out.begin() + n * (chunk_a + chunk_b));
    std::copy_n(xb.begin() + n * chunk_b, chunk_b, out.begin() + n * (chunk_a + chunk_b) + chunk_a);
  }
  return detail::make_result(std::move(shape), std::move(out), {a, b},
                             [batch, chunk_a, chunk_b](Node& self) {
    double* ga = grad_of(self, 0);
    double* gb = grad_of(self, 1);
    for (std::size_t n = 0; n < batch; ++n) {
      const double* src = self.grad.data() + n * (chunk_a + chunk_b);
      if (ga) {
        for (std::size_t i = 0; i < chunk_a; ++i) ga[n * chunk_a + i] += src[i];
      }
      if (gb) {
        for (std::size_t i = 0; i < chunk_b; ++i) gb[n * chunk_b + i] += src[chunk_a + i];
      }
    }
  });
}

std::vector<double> softmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw DimensionError("softmax_rows: expected [B, K]");
  std::size_t rows = logits.dim(0), k = logits.dim(1);
  std::vector<double> p(logits.numel());
  internal::softmax_rows(logits.data().data(), rows, k, p.data());
  return p;
}

Tensor expected_index(const Tensor& logits) {
  if (logits.rank() != 2) throw DimensionError("expected_index: expected [B, K]");
  std::size_t rows = logits.dim(0), k = logits.dim(1);
  std::vector<double> p(logits.numel());
  internal::softmax_rows(logits.data().data(), rows, k, p.data());
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < k; ++i) out[r] += static_cast<double>(i) * p[r * k + i];
  }
  return detail::make_result({rows}, std::move(out), {logits},
                             [p = std::move(p), rows, k](Node& self) {
    double* g = grad_of(self, 0);
    if (!g) return;
    // d/dz_j Σ i p_i = p_j (j - E[i])
    for (std::size_t r = 0; r < rows; ++r) {
      double e = self.data[r];
      for (std::size_t j = 0; j < k; ++j) {
        g[r * k + j] += self.grad[r] * p[r * k + j] * (static_cast<double>(j) - e);
      }
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets) {
  if (logits.rank() != 2) throw DimensionError("cross_entropy: expected [B, K]");
  std::size_t rows = logits.dim(0), k = logits.dim(1);
  if (targets.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(rows) + " rows");
  }
  for (std::size_t t : targets) {
    if (t >= k) throw ArgumentError("cross_entropy: target " + std::to_string(t) + " >= " + std::to_string(k));
  }
  std::vector<double> p(logits.numel());
  internal::softmax_rows(logits.data().data(), rows, k, p.data());
  std::vector<double> out(rows);
  auto z = logits.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double m = *std::max_element(z.begin() + r * k, z.begin() + (r + 1) * k);
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += std::exp(z[r * k + i] - m);
    out[r] = m + std::log(s) - z[r * k + targets[r]];
  }
  std::vector<std::size_t> tgt(targets.begin(), targets.end());
  return detail::make_result({rows}, std::move(out), {logits},
                             [p = std::move(p), tgt = std::move(tgt), k](Node& self) {
    double* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t r = 0; r < tgt.size(); ++r) {
      for (std::size_t j = 0; j < k; ++j) {
        double onehot = j == tgt[r] ? 1.0 : 0.0;
        g[r * k + j] += self.grad[r] * (p[r * k + j] - onehot);
      }
    }
  });
}

Tensor cosine_distance_rows(const Tensor& a, const Tensor& b, double norm_floor) {
  require_same_shape(a, b, "cosine_distance_rows");
  if (a.rank() != 2) throw DimensionError("cosine_distance_rows: expected [B, D]");
  std::size_t rows = a.dim(0), d = a.dim(1);
  auto x = a.data(), y = b.data();
  std::vector<double> na(rows), nb(rows), dots(rows), out(rows);
  bool clamped = false;
  for (std::size_t r = 0; r < rows; ++r) {
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < d; ++i) {
      sxx += x[r * d + i] * x[r * d + i];
      syy += y[r * d + i] * y[r * d + i];
      sxy += x[r * d + i] * y[r * d + i];
    }
    double nx = std::sqrt(sxx), ny = std::sqrt(syy);
    if (nx < norm_floor || ny < norm_floor) clamped = true;
    na[r] = std::max(nx, norm_floor);
    nb[r] = std::max(ny, norm_floor);
    dots[r] = sxy;
    out[r] = 1.0 - sxy / (na[r] * nb[r]);
  }
  if (clamped) warn("cosine distance: embedding norm below " + std::to_string(norm_floor) + ", clamped");
  return detail::make_result({rows}, std::move(out), {a, b},
                             [na, nb, dots, rows, d, norm_floor](Node& self) {
    double* ga = grad_of(self, 0);
    double* gb = grad_of(self, 1);
    const auto& x = self.parents[0]->data;
    const auto& y = self.parents[1]->data;
    for (std::size_t r = 0; r < rows; ++r) {
      double c = dots[r] / (na[r] * nb[r]);
      double g = self.grad[r];
      // Norm terms drop out of the derivative where the floor is active.
      bool ax = na[r] > norm_floor, by = nb[r] > norm_floor;
      for (std::size_t i = 0; i < d; ++i) {
        double xi = x[r * d + i], yi = y[r * d + i];
        if (ga) {
          double dc = yi / (na[r] * nb[r]) - (ax ? c * xi / (na[r] * na[r]) : 0.0);
          ga[r * d + i] -= g * dc;
        }
        if (gb) {
          double dc = xi / (na[r] * nb[r]) - (by ? c * yi / (nb[r] * nb[r]) : 0.0);
          gb[r * d + i] -= g * dc;
        }
      }
    }
  });
}

Tensor total_variation(const Tensor& input) {
  if (input.rank() != 4) throw DimensionError("total_variation: expected NCHW input");
  std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h * w < 2) throw DimensionError("total_variation: needs at least two pixels");
  auto x = input.data();
  double norm = 1.0 / static_cast<double>(n * c * h * w);
  double total = 0.0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const double* p = x.data() + plane * h * w;
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        if (i + 1 < h) total += std::abs(p[(i + 1) * w + j] - p[i * w + j]);
        if (j + 1 < w) total += std::abs(p[i * w + j + 1] - p[i * w + j]);
      }
    }
  }
  return detail::make_result({1}, {total * norm}, {input}, [n, c, h, w, norm](Node& self) {
    double* g = grad_of(self, 0);
    if (!g) return;
    const auto& x = self.parents[0]->data;
    double s = self.grad[0] * norm;
    auto sign = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
    for (std::size_t plane = 0; plane < n * c; ++plane) {
      const double* p = x.data() + plane * h * w;
      double* gp = g + plane * h * w;
      for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          if (i + 1 < h) {
            double sg = s * sign(p[(i + 1) * w + j] - p[i * w + j]);
            gp[(i + 1) * w + j] += sg;
            gp[i * w + j] -= sg;
          }
          if (j + 1 < w) {
            double sg = s * sign(p[i * w + j + 1] - p[i * w + j]);
            gp[i * w + j + 1] += sg;
            gp[i * w + j] -= sg;
          }
        }
      }
    }
  });
}

Tensor tile_planes(const Tensor& labels, std::size_t height, std::size_t width) {
  if (labels.rank() != 2) throw DimensionError("tile_planes: expected [N, K] labels");
  std::size_t n = labels.dim(0), k = labels.dim(1), hw = height * width;
  std::vector<double> out(n * k * hw);
  auto x = labels.data();
  for (std::size_t i = 0; i < n * k; ++i) std::fill_n(out.begin() + i * hw, hw, x[i]);
  return detail::make_result({n, k, height, width}, std::move(out), {labels}, [hw](Node& self) {
    double* g = grad_of(self, 0);
    if (!g) return;
    std::size_t planes = self.parents[0]->data.size();
    for (std::size_t i = 0; i < planes; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < hw; ++j) s += self.grad[i * hw + j];
      g[i] += s;
    }
  });
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

}  // namespace agrgan::ops
