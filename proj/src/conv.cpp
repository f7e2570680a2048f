// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

// Dense layers: convolution via im2col + GEMM, transposed convolution as its
// adjoint, fully-connected, pooling and the spectral-norm division.

#include <Eigen/Core>
#include <cmath>

#include "agrgan/errors.hpp"
#include "agrgan/ops.hpp"
#include "ops_internal.hpp"

namespace agrgan::ops {

using detail::Node;
using internal::grad_of;

namespace {

using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;

struct Geometry {
  std::size_t n, c, h, w;  // image side
  std::size_t k, stride, pad;
  std::size_t oh, ow;  // convolution-output side
  std::size_t rows() const { return c * k * k; }
  std::size_t cols() const { return n * oh * ow; }
};

// Unfolds image patches into a [C·k·k, N·oh·ow] row-major matrix.
void im2col(const double* img, const Geometry& g, double* col) {
  const std::size_t cols = g.cols(), plane = g.oh * g.ow;
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        double* row = col + ((c * g.k + ki) * g.k + kj) * cols;
        for (std::size_t n = 0; n < g.n; ++n) {
          const double* src = img + (n * g.c + c) * g.h * g.w;
          double* dst = row + n * plane;
          for (std::size_t oh = 0; oh < g.oh; ++oh) {
            long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.pad);
            double* out = dst + oh * g.ow;
            if (ih < 0 || ih >= static_cast<long>(g.h)) {
              std::fill_n(out, g.ow, 0.0);
              continue;
            }
            const double* line = src + ih * g.w;
            for (std::size_t ow = 0; ow < g.ow; ++ow) {
              long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.pad);
              out[ow] = (iw >= 0 && iw < static_cast<long>(g.w)) ? line[iw] : 0.0;
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-and-adds columns back into the image.
void col2im(const double* col, const Geometry& g, double* img) {
  const std::size_t cols = g.cols(), plane = g.oh * g.ow;
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        const double* row = col + ((c * g.k + ki) * g.k + kj) * cols;
        for (std::size_t n = 0; n < g.n; ++n) {
          double* dst = img + (n * g.c + c) * g.h * g.w;
          const double* src = row + n * plane;
          for (std::size_t oh = 0; oh < g.oh; ++oh) {
            long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.pad);
            if (ih < 0 || ih >= static_cast<long>(g.h)) continue;
            double* line = dst + ih * g.w;
            const double* in = src + oh * g.ow;
            for (std::size_t ow = 0; ow < g.ow; ++ow) {
              long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.pad);
              if (iw >= 0 && iw < static_cast<long>(g.w)) line[iw] += in[ow];
            }
          }
        }
      }
    }
  }
}

// [N, C, P] <-> [C, N·P] layout shuffles between NCHW tensors and GEMM operands.
void nchw_to_cn(const double* src, std::size_t n, std::size_t c, std::size_t p, double* dst) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j)
      std::copy_n(src + (i * c + j) * p, p, dst + j * n * p + i * p);
}

void cn_to_nchw(const double* src, std::size_t n, std::size_t c, std::size_t p, double* dst) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j)
      std::copy_n(src + j * n * p + i * p, p, dst + (i * c + j) * p);
}

void add_cn_to_nchw(const double* src, std::size_t n, std::size_t c, std::size_t p, double* dst) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double* s = src + j * n * p + i * p;
      double* d = dst + (i * c + j) * p;
      for (std::size_t q = 0; q < p; ++q) d[q] += s[q];
    }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " +
                         std::to_string(rank) + ", got " + shape_str(t.shape()));
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, std::size_t stride, std::size_t padding) {
  require_rank(input, 4, "conv2d", "input");
  require_rank(weight, 4, "conv2d", "weight");
  if (stride == 0) throw ArgumentError("conv2d: stride must be >= 1");
  const std::size_t k = weight.dim(2);
  if (weight.dim(3) != k) throw DimensionError("conv2d: weight axis 3 must equal axis 2 (square kernel)");
  if (weight.dim(1) != input.dim(1)) {
    throw DimensionError("conv2d: axis 1 (channels) of input is " + std::to_string(input.dim(1)) +
                         " but weight expects " + std::to_string(weight.dim(1)));
  }
  for (std::size_t axis : {2u, 3u}) {
    if (input.dim(axis) + 2 * padding < k) {
      throw DimensionError("conv2d: axis " + std::to_string(axis) + " of input (" +
                           std::to_string(input.dim(axis)) + " + 2*" + std::to_string(padding) +
                           ") is smaller than kernel " + std::to_string(k));
    }
  }
  Geometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3), k, stride, padding, 0, 0};
  g.oh = (g.h + 2 * padding - k) / stride + 1;
  g.ow = (g.w + 2 * padding - k) / stride + 1;
  const std::size_t o = weight.dim(0), plane = g.oh * g.ow;

  std::vector<double> col(g.rows() * g.cols());
  im2col(input.data().data(), g, col.data());
  std::vector<double> out_cn(o * g.cols());
  MapR(out_cn.data(), o, g.cols()).noalias() =
      CMapR(weight.data().data(), o, g.rows()) * CMapR(col.data(), g.rows(), g.cols());
  std::vector<double> out(g.n * o * plane);
  cn_to_nchw(out_cn.data(), g.n, o, plane, out.data());

  return detail::make_result({g.n, o, g.oh, g.ow}, std::move(out), {input, weight},
                             [g, o, plane, col = std::move(col)](Node& self) {
    std::vector<double> gout(o * g.cols());
    nchw_to_cn(self.grad.data(), g.n, o, plane, gout.data());
    CMapR gmat(gout.data(), o, g.cols());
    if (double* gw = grad_of(self, 1)) {
      MapR(gw, o, g.rows()).noalias() += gmat * CMapR(col.data(), g.rows(), g.cols()).transpose();
    }
    if (double* gx = grad_of(self, 0)) {
      std::vector<double> gcol(g.rows() * g.cols());
      MapR(gcol.data(), g.rows(), g.cols()).noalias() =
          CMapR(self.parents[1]->data.data(), o, g.rows()).transpose() * gmat;
      col2im(gcol.data(), g, gx);
    }
  });
}

std::size_t doubling_output_padding(std::size_t kernel, std::size_t stride, std::size_t padding) {
  // (H-1)s - 2p + k + op == sH  =>  op = s + 2p - k
  long op = static_cast<long>(stride + 2 * padding) - static_cast<long>(kernel);
  if (op < 0 || op >= static_cast<long>(stride)) {
    throw ArgumentError("no output padding doubles spatial size for k=" + std::to_string(kernel) +
                        ", stride=" + std::to_string(stride) + ", padding=" + std::to_string(padding));
  }
  return static_cast<std::size_t>(op);
}

Tensor deconv2d(const Tensor& input, const Tensor& weight, std::size_t stride, std::size_t padding,
                std::size_t output_padding) {
  require_rank(input, 4, "deconv2d", "input");
  require_rank(weight, 4, "deconv2d", "weight");
  if (stride == 0) throw ArgumentError("deconv2d: stride must be >= 1");
  if (output_padding >= stride) throw ArgumentError("deconv2d: output_padding must be < stride");
  const std::size_t k = weight.dim(2);
  if (weight.dim(3) != k) throw DimensionError("deconv2d: weight axis 3 must equal axis 2 (square kernel)");
  if (weight.dim(0) != input.dim(1)) {
    throw DimensionError("deconv2d: axis 1 (channels) of input is " + std::to_string(input.dim(1)) +
                         " but weight expects " + std::to_string(weight.dim(0)));
  }
  const std::size_t n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t cout = weight.dim(1);
  long oh = static_cast<long>((h - 1) * stride + k + output_padding) - 2 * static_cast<long>(padding);
  long ow = static_cast<long>((w - 1) * stride + k + output_padding) - 2 * static_cast<long>(padding);
  if (oh <= 0 || ow <= 0) throw DimensionError("deconv2d: padding leaves no output pixels");
  // The output plays the image role and the input plays the conv-output role.
  Geometry g{n, cout, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow), k, stride, padding, h, w};
  const std::size_t plane = h * w;

  std::vector<double> x_cn(cin * g.cols());
  nchw_to_cn(input.data().data(), n, cin, plane, x_cn.data());
  std::vector<double> col(g.rows() * g.cols());
  MapR(col.data(), g.rows(), g.cols()).noalias() =
      CMapR(weight.data().data(), cin, g.rows()).transpose() * CMapR(x_cn.data(), cin, g.cols());
  std::vector<double> out(n * cout * g.h * g.w, 0.0);
  col2im(col.data(), g, out.data());

  return detail::make_result({n, cout, g.h, g.w}, std::move(out), {input, weight},
                             [g, cin, plane, x_cn = std::move(x_cn)](Node& self) {
    std::vector<double> gcol(g.rows() * g.cols());
    im2col(self.grad.data(), g, gcol.data());
    CMapR gmat(gcol.data(), g.rows(), g.cols());
    if (double* gw = grad_of(self, 1)) {
      MapR(gw, cin, g.rows()).noalias() += CMapR(x_cn.data(), cin, g.cols()) * gmat.transpose();
    }
    if (double* gx = grad_of(self, 0)) {
      std::vector<double> gx_cn(cin * g.cols());
      MapR(gx_cn.data(), cin, g.cols()).noalias() =
          CMapR(self.parents[1]->data.data(), cin, g.rows()) * gmat;
      add_cn_to_nchw(gx_cn.data(), g.n, cin, plane, gx);
    }
  });
}

Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(input, 2, "fully_connected", "input");
  require_rank(weight, 2, "fully_connected", "weight");
  require_rank(bias, 1, "fully_connected", "bias");
  const std::size_t b = input.dim(0), in = input.dim(1), out_dim = weight.dim(0);
  if (weight.dim(1) != in) {
    throw DimensionError("fully_connected: axis 1 of input is " + std::to_string(in) +
                         " but weight axis 1 is " + std::to_string(weight.dim(1)));
  }
  if (bias.dim(0) != out_dim) {
    throw DimensionError("fully_connected: bias axis 0 is " + std::to_string(bias.dim(0)) +
                         " but weight axis 0 is " + std::to_string(out_dim));
  }
  std::vector<double> out(b * out_dim);
  MapR y(out.data(), b, out_dim);
  y.noalias() = CMapR(input.data().data(), b, in) * CMapR(weight.data().data(), out_dim, in).transpose();
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t j = 0; j < out_dim; ++j) y(r, j) += bias.data()[j];

  return detail::make_result({b, out_dim}, std::move(out), {input, weight, bias},
                             [b, in, out_dim](Node& self) {
    CMapR gy(self.grad.data(), b, out_dim);
    if (double* gx = grad_of(self, 0)) {
      MapR(gx, b, in).noalias() += gy * CMapR(self.parents[1]->data.data(), out_dim, in);
    }
    if (double* gw = grad_of(self, 1)) {
      MapR(gw, out_dim, in).noalias() += gy.transpose() * CMapR(self.parents[0]->data.data(), b, in);
    }
    if (double* gb = grad_of(self, 2)) {
      for (std::size_t r = 0; r < b; ++r)
        for (std::size_t j = 0; j < out_dim; ++j) gb[j] += gy(r, j);
    }
  });
}

Tensor bias_add(const Tensor& input, const Tensor& bias) {
  require_rank(input, 4, "bias_add", "input");
  require_rank(bias, 1, "bias_add", "bias");
  const std::size_t n = input.dim(0), c = input.dim(1), plane = input.dim(2) * input.dim(3);
  if (bias.dim(0) != c) {
    throw DimensionError("bias_add: axis 1 (channels) of input is " + std::to_string(c) +
                         " but bias has " + std::to_string(bias.dim(0)));
  }
  std::vector<double> out(input.data().begin(), input.data().end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j)
      for (std::size_t q = 0; q < plane; ++q) out[(i * c + j) * plane + q] += bias.data()[j];
  return detail::make_result(input.shape(), std::move(out), {input, bias}, [n, c, plane](Node& self) {
    if (double* gx = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
    }
    if (double* gb = grad_of(self, 1)) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          double s = 0.0;
          for (std::size_t q = 0; q < plane; ++q) s += self.grad[(i * c + j) * plane + q];
          gb[j] += s;
        }
    }
  });
}

Tensor adaptive_avg_pool(const Tensor& input, std::size_t out_h, std::size_t out_w) {
  require_rank(input, 4, "adaptive_avg_pool", "input");
  if (out_h == 0 || out_w == 0) throw ArgumentError("adaptive_avg_pool: output size must be positive");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (out_h > h || out_w > w) {
    throw ArgumentError("adaptive_avg_pool: output " + std::to_string(out_h) + "x" +
                        std::to_string(out_w) + " exceeds input " + std::to_string(h) + "x" +
                        std::to_string(w));
  }
  auto lo = [](std::size_t i, std::size_t in, std::size_t out) { return i * in / out; };
  auto hi = [](std::size_t i, std::size_t in, std::size_t out) { return ((i + 1) * in + out - 1) / out; };
  std::vector<double> out(n * c * out_h * out_w);
  auto x = input.data();
  for (std::size_t p = 0; p < n * c; ++p) {
    for (std::size_t i = 0; i < out_h; ++i) {
      for (std::size_t j = 0; j < out_w; ++j) {
        std::size_t r0 = lo(i, h, out_h), r1 = hi(i, h, out_h);
        std::size_t c0 = lo(j, w, out_w), c1 = hi(j, w, out_w);
        double s = 0.0;
        for (std::size_t r = r0; r < r1; ++r)
          for (std::size_t q = c0; q < c1; ++q) s += x[p * h * w + r * w + q];
        out[(p * out_h + i) * out_w + j] = s / static_cast<double>((r1 - r0) * (c1 - c0));
      }
    }
  }
  return detail::make_result({n, c, out_h, out_w}, std::move(out), {input},
                             [=](Node& self) {
    double* gx = grad_of(self, 0);
    if (!gx) return;
    for (std::size_t p = 0; p < n * c; ++p) {
      for (std::size_t i = 0; i < out_h; ++i) {
        for (std::size_t j = 0; j < out_w; ++j) {
          std::size_t r0 = lo(i, h, out_h), r1 = hi(i, h, out_h);
          std::size_t c0 = lo(j, w, out_w), c1 = hi(j, w, out_w);
          double g = self.grad[(p * out_h + i) * out_w + j] / static_cast<double>((r1 - r0) * (c1 - c0));
          for (std::size_t r = r0; r < r1; ++r)
            for (std::size_t q = c0; q < c1; ++q) gx[p * h * w + r * w + q] += g;
        }
      }
    }
  });
}

Tensor spectral_divide(const Tensor& weight, std::span<const double> u, std::span<const double> v) {
  const std::size_t rows = weight.dim(0), cols = weight.numel() / rows;
  if (u.size() != rows || v.size() != cols) {
    throw DimensionError("spectral_divide: u/v lengths " + std::to_string(u.size()) + "/" +
                         std::to_string(v.size()) + " do not match weight matrix " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  Eigen::Map<const Eigen::VectorXd> uu(u.data(), rows), vv(v.data(), cols);
  CMapR wm(weight.data().data(), rows, cols);
  double sigma = uu.dot(wm * vv);
  if (!(std::abs(sigma) > 1e-12)) {
    warn("spectral_divide: sigma estimate " + std::to_string(sigma) + " clamped to 1e-12");
    sigma = 1e-12;
  }
  std::vector<double> out(weight.data().begin(), weight.data().end());
  for (double& x : out) x /= sigma;
  std::vector<double> uc(u.begin(), u.end()), vc(v.begin(), v.end());
  return detail::make_result(weight.shape(), std::move(out), {weight},
                             [rows, cols, sigma, uc = std::move(uc), vc = std::move(vc)](Node& self) {
    double* gw = grad_of(self, 0);
    if (!gw) return;
    // d(W/σ) with σ = uᵀWv:  G/σ - (<G, W>/σ²) u vᵀ
    const auto& w = self.parents[0]->data;
    double gdotw = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) gdotw += self.grad[i] * w[i];
    double coef = gdotw / (sigma * sigma);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        gw[r * cols + c] += self.grad[r * cols + c] / sigma - coef * uc[r] * vc[c];
  });
}

}  // namespace agrgan::ops
