// Copyright 2026 The mrspoof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mrspoof/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <string>

namespace mrspoof {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

void require_rank(const Shape& s, std::size_t rank, const char* op,
                  const char* what) {
  if (s.size() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " +
                         std::to_string(rank) + ", got " + shape_to_string(s));
  }
}

template <typename T>
Tensor<T>* grad_of(const std::shared_ptr<Node<T>>& n) {
  return n->requires_grad ? &n->grad_buffer() : nullptr;
}

// Geometry of one conv2d call.
struct ConvGeom {
  std::size_t n, cin, h, w, cout, kh, kw, sh, sw, ph, pw, oh, ow;
  std::size_t k() const { return cin * kh * kw; }
  std::size_t p() const { return oh * ow; }
  bool pointwise() const {
    return kh == 1 && kw == 1 && sh == 1 && sw == 1 && ph == 0 && pw == 0;
  }
};

// cols is K x P, row (c, i, j), column (y, x).
template <typename T>
void im2col(const T* x, const ConvGeom& g, T* cols) {
  for (std::size_t c = 0; c < g.cin; ++c) {
    const T* plane = x + c * g.h * g.w;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        T* row = cols + ((c * g.kh + i) * g.kw + j) * g.p();
        for (std::size_t y = 0; y < g.oh; ++y) {
          const std::ptrdiff_t iy =
              static_cast<std::ptrdiff_t>(y * g.sh + i) - static_cast<std::ptrdiff_t>(g.ph);
          T* out = row + y * g.ow;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(out, out + g.ow, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.w;
          for (std::size_t xo = 0; xo < g.ow; ++xo) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xo * g.sw + j) -
                                      static_cast<std::ptrdiff_t>(g.pw);
            out[xo] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w))
                          ? T{0}
                          : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeom& g, T* dx) {
  for (std::size_t c = 0; c < g.cin; ++c) {
    T* plane = dx + c * g.h * g.w;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const T* row = cols + ((c * g.kh + i) * g.kw + j) * g.p();
        for (std::size_t y = 0; y < g.oh; ++y) {
          const std::ptrdiff_t iy =
              static_cast<std::ptrdiff_t>(y * g.sh + i) - static_cast<std::ptrdiff_t>(g.ph);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          T* dst = plane + static_cast<std::size_t>(iy) * g.w;
          const T* in = row + y * g.ow;
          for (std::size_t xo = 0; xo < g.ow; ++xo) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xo * g.sw + j) -
                                      static_cast<std::ptrdiff_t>(g.pw);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.w)) dst[ix] += in[xo];
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t conv_out_size(std::size_t in, std::size_t kernel, std::size_t stride,
                          std::size_t pad) {
  if (stride == 0) throw DimensionError("stride must be positive");
  if (in + 2 * pad < kernel) {
    throw DimensionError("kernel " + std::to_string(kernel) +
                         " does not fit padded input " +
                         std::to_string(in + 2 * pad));
  }
  return (in + 2 * pad - kernel) / stride + 1;
}

template <typename T>
BatchNormState<T>::BatchNormState(std::size_t channels)
    : gamma(Tensor<T>({channels}, T{1}), true),
      beta(Tensor<T>({channels}, T{0}), true),
      running_mean({channels}, T{0}),
      running_var({channels}, T{1}) {}

namespace ops {

template <typename T>
Variable<T> conv2d(const Variable<T>& input, const Variable<T>& weight,
                   const std::optional<Variable<T>>& bias, Size2 stride,
                   Size2 padding) {
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  require_rank(xs, 4, "conv2d", "input");
  require_rank(ws, 4, "conv2d", "weight");
  if (xs[1] != ws[1]) {
    throw DimensionError("conv2d: input channel axis (axis 1) is " +
                         std::to_string(xs[1]) + " but weight expects C_in = " +
                         std::to_string(ws[1]));
  }
  if (bias && bias->value().numel() != ws[0]) {
    throw DimensionError("conv2d: bias length " +
                         std::to_string(bias->value().numel()) +
                         " does not match C_out = " + std::to_string(ws[0]));
  }
  ConvGeom g{};
  g.n = xs[0];
  g.cin = xs[1];
  g.h = xs[2];
  g.w = xs[3];
  g.cout = ws[0];
  g.kh = ws[2];
  g.kw = ws[3];
  g.sh = stride.h;
  g.sw = stride.w;
  g.ph = padding.h;
  g.pw = padding.w;
  try {
    g.oh = conv_out_size(g.h, g.kh, g.sh, g.ph);
    g.ow = conv_out_size(g.w, g.kw, g.sw, g.pw);
  } catch (const DimensionError& e) {
    throw DimensionError(std::string("conv2d: input ") + shape_to_string(xs) +
                         " vs weight " + shape_to_string(ws) + ": " + e.what());
  }

  Tensor<T> out({g.n, g.cout, g.oh, g.ow});
  const std::size_t in_stride = g.cin * g.h * g.w;
  const std::size_t out_stride = g.cout * g.p();
  CMapMat<T> wmat(weight.value().ptr(), g.cout, g.k());
  std::vector<T> cols(g.pointwise() ? 0 : g.k() * g.p());
  for (std::size_t n = 0; n < g.n; ++n) {
    const T* x = input.value().ptr() + n * in_stride;
    const T* colp = x;
    if (!g.pointwise()) {
      im2col(x, g, cols.data());
      colp = cols.data();
    }
    MapMat<T> y(out.ptr() + n * out_stride, g.cout, g.p());
    y.noalias() = wmat * CMapMat<T>(colp, g.k(), g.p());
    if (bias) {
      const T* b = bias->value().ptr();
      for (std::size_t c = 0; c < g.cout; ++c) y.row(c).array() += b[c];
    }
  }

  std::vector<Variable<T>> inputs{input, weight};
  if (bias) inputs.push_back(*bias);
  return make_result<T>(
      std::move(out), "conv2d", std::move(inputs), [g](Node<T>& self) {
        const auto& xin = self.inputs[0];
        const auto& win = self.inputs[1];
        Tensor<T>* dx = grad_of(xin);
        Tensor<T>* dw = grad_of(win);
        Tensor<T>* db = self.inputs.size() > 2 ? grad_of(self.inputs[2]) : nullptr;
        const std::size_t in_stride = g.cin * g.h * g.w;
        const std::size_t out_stride = g.cout * g.p();
        CMapMat<T> wmat(win->value.ptr(), g.cout, g.k());
        std::vector<T> cols(g.pointwise() ? 0 : g.k() * g.p());
        std::vector<T> dcols(g.pointwise() || !dx ? 0 : g.k() * g.p());
        for (std::size_t n = 0; n < g.n; ++n) {
          CMapMat<T> dy(self.grad.ptr() + n * out_stride, g.cout, g.p());
          if (db) {
            T* b = db->ptr();
            for (std::size_t c = 0; c < g.cout; ++c) b[c] += dy.row(c).sum();
          }
          if (dw) {
            const T* x = xin->value.ptr() + n * in_stride;
            const T* colp = x;
            if (!g.pointwise()) {
              im2col(x, g, cols.data());
              colp = cols.data();
            }
            MapMat<T> dwm(dw->ptr(), g.cout, g.k());
            dwm.noalias() += dy * CMapMat<T>(colp, g.k(), g.p()).transpose();
          }
          if (dx) {
            T* dxp = dx->ptr() + n * in_stride;
            if (g.pointwise()) {
              MapMat<T>(dxp, g.k(), g.p()).noalias() += wmat.transpose() * dy;
            } else {
              MapMat<T> dc(dcols.data(), g.k(), g.p());
              dc.noalias() = wmat.transpose() * dy;
              col2im_add(dcols.data(), g, dxp);
            }
          }
        }
      });
}

template <typename T>
Variable<T> maxpool2d(const Variable<T>& input, Size2 kernel, Size2 stride) {
  const Shape& xs = input.shape();
  require_rank(xs, 4, "maxpool2d", "input");
  if (xs[2] < kernel.h || xs[3] < kernel.w) {
    throw DimensionError("maxpool2d: kernel " + std::to_string(kernel.h) + "x" +
                         std::to_string(kernel.w) + " larger than input " +
                         shape_to_string(xs));
  }
  const std::size_t planes = xs[0] * xs[1];
  const std::size_t h = xs[2], w = xs[3];
  const std::size_t oh = conv_out_size(h, kernel.h, stride.h, 0);
  const std::size_t ow = conv_out_size(w, kernel.w, stride.w, 0);
  Tensor<T> out({xs[0], xs[1], oh, ow});
  std::vector<std::uint32_t> argmax(out.numel());
  const T* x = input.value().ptr();
  for (std::size_t p = 0; p < planes; ++p) {
    const T* plane = x + p * h * w;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xo = 0; xo < ow; ++xo) {
        std::size_t best = (y * stride.h) * w + xo * stride.w;
        T best_v = plane[best];
        for (std::size_t i = 0; i < kernel.h; ++i) {
          for (std::size_t j = 0; j < kernel.w; ++j) {
            const std::size_t idx = (y * stride.h + i) * w + xo * stride.w + j;
            if (plane[idx] > best_v) {
              best_v = plane[idx];
              best = idx;
            }
          }
        }
        const std::size_t o = (p * oh + y) * ow + xo;
        out[o] = best_v;
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return make_result<T>(
      std::move(out), "maxpool2d", {input},
      [argmax = std::move(argmax), planes, h, w, oh, ow](Node<T>& self) {
        T* dx = self.inputs[0]->grad_buffer().ptr();
        const T* dy = self.grad.ptr();
        for (std::size_t p = 0; p < planes; ++p) {
          for (std::size_t o = 0; o < oh * ow; ++o) {
            const std::size_t flat = p * oh * ow + o;
            dx[p * h * w + argmax[flat]] += dy[flat];
          }
        }
      });
}

template <typename T>
Variable<T> mfm(const Variable<T>& input) {
  const Shape& xs = input.shape();
  if (xs.size() != 2 && xs.size() != 4) {
    throw DimensionError("mfm: input must be NxC or NxCxHxW, got " +
                         shape_to_string(xs));
  }
  if (xs[1] % 2 != 0) {
    throw DimensionError("mfm: channel axis (axis 1) must be even, got " +
                         std::to_string(xs[1]));
  }
  const std::size_t n = xs[0];
  const std::size_t half = xs[1] / 2;
  const std::size_t inner = xs.size() == 4 ? xs[2] * xs[3] : 1;
  Shape os = xs;
  os[1] = half;
  Tensor<T> out(os);
  const T* x = input.value().ptr();
  for (std::size_t b = 0; b < n; ++b) {
    const T* lo = x + b * 2 * half * inner;
    const T* hi = lo + half * inner;
    T* o = out.ptr() + b * half * inner;
    for (std::size_t i = 0; i < half * inner; ++i) o[i] = std::max(lo[i], hi[i]);
  }
  return make_result<T>(std::move(out), "mfm", {input},
                        [n, half, inner](Node<T>& self) {
                          const T* x = self.inputs[0]->value.ptr();
                          T* dx = self.inputs[0]->grad_buffer().ptr();
                          const T* dy = self.grad.ptr();
                          for (std::size_t b = 0; b < n; ++b) {
                            const std::size_t base = b * 2 * half * inner;
                            for (std::size_t i = 0; i < half * inner; ++i) {
                              const std::size_t a = base + i;
                              const std::size_t c = a + half * inner;
                              const T g = dy[b * half * inner + i];
                              // ties: first operand wins
                              if (x[a] >= x[c]) {
                                dx[a] += g;
                              } else {
                                dx[c] += g;
                              }
                            }
                          }
                        });
}

template <typename T>
Variable<T> linear(const Variable<T>& input, const Variable<T>& weight,
                   const std::optional<Variable<T>>& bias) {
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  require_rank(xs, 2, "linear", "input");
  require_rank(ws, 2, "linear", "weight");
  if (xs[1] != ws[1]) {
    throw DimensionError("linear: input feature axis (axis 1) is " +
                         std::to_string(xs[1]) + " but weight expects D_in = " +
                         std::to_string(ws[1]));
  }
  if (bias && bias->value().numel() != ws[0]) {
    throw DimensionError("linear: bias length does not match D_out = " +
                         std::to_string(ws[0]));
  }
  const std::size_t n = xs[0], din = xs[1], dout = ws[0];
  Tensor<T> out({n, dout});
  MapMat<T> y(out.ptr(), n, dout);
  y.noalias() = CMapMat<T>(input.value().ptr(), n, din) *
                CMapMat<T>(weight.value().ptr(), dout, din).transpose();
  if (bias) {
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias->value().ptr(),
                                                             dout);
    y.rowwise() += b;
  }
  std::vector<Variable<T>> inputs{input, weight};
  if (bias) inputs.push_back(*bias);
  return make_result<T>(
      std::move(out), "linear", std::move(inputs), [n, din, dout](Node<T>& self) {
        CMapMat<T> dy(self.grad.ptr(), n, dout);
        if (Tensor<T>* dx = grad_of(self.inputs[0])) {
          MapMat<T>(dx->ptr(), n, din).noalias() +=
              dy * CMapMat<T>(self.inputs[1]->value.ptr(), dout, din);
        }
        if (Tensor<T>* dw = grad_of(self.inputs[1])) {
          MapMat<T>(dw->ptr(), dout, din).noalias() +=
              dy.transpose() * CMapMat<T>(self.inputs[0]->value.ptr(), n, din);
        }
        if (self.inputs.size() > 2) {
          if (Tensor<T>* db = grad_of(self.inputs[2])) {
            Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(db->ptr(), dout) +=
                dy.colwise().sum();
          }
        }
      });
}

template <typename T>
Variable<T> batchnorm2d(const Variable<T>& input, BatchNormState<T>& state,
                        Mode mode) {
  const Shape& xs = input.shape();
  require_rank(xs, 4, "batchnorm2d", "input");
  const std::size_t n = xs[0], c = xs[1], inner = xs[2] * xs[3];
  if (c != state.channels()) {
    throw DimensionError("batchnorm2d: input channel axis (axis 1) is " +
                         std::to_string(c) + " but state has " +
                         std::to_string(state.channels()) + " channels");
  }
  const T* x = input.value().ptr();
  const T* gamma = state.gamma.value().ptr();
  const T* beta = state.beta.value().ptr();
  Tensor<T> out(xs);
  T* y = out.ptr();

  if (mode == Mode::kEval) {
    if (!state.stats_recorded) {
      static thread_local bool warned = false;
      if (!warned) {
        std::cerr << "warning: batchnorm2d in eval mode before any running "
                     "statistics were recorded; using mean 0, var 1\n";
        warned = true;
      }
    }
    std::vector<T> scale(c), shift(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T inv = T{1} / std::sqrt(state.running_var[ch] + T(state.epsilon));
      scale[ch] = gamma[ch] * inv;
      shift[ch] = beta[ch] - state.running_mean[ch] * scale[ch];
    }
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const T* xp = x + (b * c + ch) * inner;
        T* yp = y + (b * c + ch) * inner;
        for (std::size_t i = 0; i < inner; ++i) yp[i] = xp[i] * scale[ch] + shift[ch];
      }
    }
    return make_result<T>(
        std::move(out), "batchnorm2d", {input, state.gamma, state.beta},
        [n, c, inner, scale, rm = state.running_mean,
         rv = state.running_var, eps = state.epsilon](Node<T>& self) {
          const T* dy = self.grad.ptr();
          const T* xv = self.inputs[0]->value.ptr();
          Tensor<T>* dx = grad_of(self.inputs[0]);
          Tensor<T>* dg = grad_of(self.inputs[1]);
          Tensor<T>* dbeta = grad_of(self.inputs[2]);
          for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t ch = 0; ch < c; ++ch) {
              const std::size_t off = (b * c + ch) * inner;
              const T inv = T{1} / std::sqrt(rv[ch] + T(eps));
              T sg = 0, sb = 0;
              for (std::size_t i = 0; i < inner; ++i) {
                if (dx) (*dx)[off + i] += dy[off + i] * scale[ch];
                sg += dy[off + i] * (xv[off + i] - rm[ch]) * inv;
                sb += dy[off + i];
              }
              if (dg) (*dg)[ch] += sg;
              if (dbeta) (*dbeta)[ch] += sb;
            }
          }
        });
  }

  const std::size_t m = n * inner;
  if (m < 2) {
    throw DimensionError("batchnorm2d: train mode needs more than one value per "
                         "channel, got input " + shape_to_string(xs));
  }
  Tensor<T> xhat(xs);
  std::vector<T> inv_std(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum = 0;
    for (std::size_t b = 0; b < n; ++b) {
      const T* xp = x + (b * c + ch) * inner;
      for (std::size_t i = 0; i < inner; ++i) sum += xp[i];
    }
    const double mean = sum / static_cast<double>(m);
    double sq = 0;
    for (std::size_t b = 0; b < n; ++b) {
      const T* xp = x + (b * c + ch) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        const double d = xp[i] - mean;
        sq += d * d;
      }
    }
    const double var = sq / static_cast<double>(m);
    const double inv = 1.0 / std::sqrt(var + state.epsilon);
    inv_std[ch] = static_cast<T>(inv);
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * c + ch) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        const T xh = static_cast<T>((x[off + i] - mean) * inv);
        xhat[off + i] = xh;
        y[off + i] = gamma[ch] * xh + beta[ch];
      }
    }
    const double mom = state.momentum;
    const double unbiased = sq / static_cast<double>(m - 1);
    state.running_mean[ch] =
        static_cast<T>((1 - mom) * state.running_mean[ch] + mom * mean);
    state.running_var[ch] =
        static_cast<T>((1 - mom) * state.running_var[ch] + mom * unbiased);
  }
  state.stats_recorded = true;
  return make_result<T>(
      std::move(out), "batchnorm2d", {input, state.gamma, state.beta},
      [n, c, inner, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Node<T>& self) {
        const T* dy = self.grad.ptr();
        const T* gamma = self.inputs[1]->value.ptr();
        Tensor<T>* dx = grad_of(self.inputs[0]);
        Tensor<T>* dg = grad_of(self.inputs[1]);
        Tensor<T>* dbeta = grad_of(self.inputs[2]);
        const double m = static_cast<double>(n * inner);
        for (std::size_t ch = 0; ch < c; ++ch) {
          double sum_dy = 0, sum_dy_xh = 0;
          for (std::size_t b = 0; b < n; ++b) {
            const std::size_t off = (b * c + ch) * inner;
            for (std::size_t i = 0; i < inner; ++i) {
              sum_dy += dy[off + i];
              sum_dy_xh += static_cast<double>(dy[off + i]) * xhat[off + i];
            }
          }
          if (dg) (*dg)[ch] += static_cast<T>(sum_dy_xh);
          if (dbeta) (*dbeta)[ch] += static_cast<T>(sum_dy);
          if (!dx) continue;
          const double k = gamma[ch] * inv_std[ch] / m;
          for (std::size_t b = 0; b < n; ++b) {
            const std::size_t off = (b * c + ch) * inner;
            for (std::size_t i = 0; i < inner; ++i) {
              (*dx)[off + i] += static_cast<T>(
                  k * (m * dy[off + i] - sum_dy - xhat[off + i] * sum_dy_xh));
            }
          }
        }
      });
}

template <typename T>
Variable<T> relu(const Variable<T>& input) {
  Tensor<T> out = input.value();
  for (T& v : out.storage()) v = v < T{0} ? T{0} : v;  // NaN propagates
  return make_result<T>(std::move(out), "relu", {input}, [](Node<T>& self) {
    const T* x = self.inputs[0]->value.ptr();
    T* dx = self.inputs[0]->grad_buffer().ptr();
    const T* dy = self.grad.ptr();
    for (std::size_t i = 0; i < self.grad.numel(); ++i) {
      if (x[i] > T{0}) dx[i] += dy[i];
    }
  });
}

template <typename T>
Variable<T> sigmoid(const Variable<T>& input) {
  Tensor<T> out = input.value();
  for (T& v : out.storage()) v = T{1} / (T{1} + std::exp(-v));
  return make_result<T>(std::move(out), "sigmoid", {input}, [](Node<T>& self) {
    const T* y = self.value.ptr();
    T* dx = self.inputs[0]->grad_buffer().ptr();
    const T* dy = self.grad.ptr();
    for (std::size_t i = 0; i < self.grad.numel(); ++i) {
      dx[i] += dy[i] * y[i] * (T{1} - y[i]);
    }
  });
}

template <typename T>
Variable<T> global_avg_pool(const Variable<T>& input) {
  const Shape& xs = input.shape();
  require_rank(xs, 4, "global_avg_pool", "input");
  const std::size_t planes = xs[0] * xs[1], inner = xs[2] * xs[3];
  Tensor<T> out({xs[0], xs[1]});
  const T* x = input.value().ptr();
  for (std::size_t p = 0; p < planes; ++p) {
    T s = 0;
    for (std::size_t i = 0; i < inner; ++i) s += x[p * inner + i];
    out[p] = s / static_cast<T>(inner);
  }
  return make_result<T>(std::move(out), "global_avg_pool", {input},
                        [planes, inner](Node<T>& self) {
                          T* dx = self.inputs[0]->grad_buffer().ptr();
                          for (std::size_t p = 0; p < planes; ++p) {
                            const T g = self.grad[p] / static_cast<T>(inner);
                            for (std::size_t i = 0; i < inner; ++i) dx[p * inner + i] += g;
                          }
                        });
}

template <typename T>
Variable<T> add(const Variable<T>& a, const Variable<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("add: shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()) + " differ");
  }
  Tensor<T> out = a.value();
  const T* bp = b.value().ptr();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bp[i];
  return make_result<T>(std::move(out), "add", {a, b}, [](Node<T>& self) {
    for (const auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      T* d = in->grad_buffer().ptr();
      for (std::size_t i = 0; i < self.grad.numel(); ++i) d[i] += self.grad[i];
    }
  });
}

template <typename T>
Variable<T> channel_scale(const Variable<T>& input, const Variable<T>& scale) {
  const Shape& xs = input.shape();
  require_rank(xs, 4, "channel_scale", "input");
  if (scale.shape() != Shape{xs[0], xs[1]}) {
    throw DimensionError("channel_scale: scale shape " +
                         shape_to_string(scale.shape()) + " must be NxC of input " +
                         shape_to_string(xs));
  }
  const std::size_t planes = xs[0] * xs[1], inner = xs[2] * xs[3];
  Tensor<T> out = input.value();
  for (std::size_t p = 0; p < planes; ++p) {
    const T s = scale.value()[p];
    for (std::size_t i = 0; i < inner; ++i) out[p * inner + i] *= s;
  }
  return make_result<T>(
      std::move(out), "channel_scale", {input, scale},
      [planes, inner](Node<T>& self) {
        const T* x = self.inputs[0]->value.ptr();
        const T* s = self.inputs[1]->value.ptr();
        Tensor<T>* dx = grad_of(self.inputs[0]);
        Tensor<T>* ds = grad_of(self.inputs[1]);
        for (std::size_t p = 0; p < planes; ++p) {
          T acc = 0;
          for (std::size_t i = 0; i < inner; ++i) {
            const T g = self.grad[p * inner + i];
            if (dx) (*dx)[p * inner + i] += g * s[p];
            acc += g * x[p * inner + i];
          }
          if (ds) (*ds)[p] += acc;
        }
      });
}

template <typename T>
Variable<T> reshape(const Variable<T>& input, Shape shape) {
  if (shape_numel(shape) != input.value().numel()) {
    throw DimensionError("reshape: cannot view " + shape_to_string(input.shape()) +
                         " as " + shape_to_string(shape));
  }
  return make_result<T>(input.value().reshaped(std::move(shape)), "reshape",
                        {input}, [](Node<T>& self) {
                          T* d = self.inputs[0]->grad_buffer().ptr();
                          for (std::size_t i = 0; i < self.grad.numel(); ++i) {
                            d[i] += self.grad[i];
                          }
                        });
}

template <typename T>
Variable<T> flatten(const Variable<T>& input) {
  const std::size_t n = input.shape().at(0);
  return reshape(input, Shape{n, input.value().numel() / n});
}

template <typename T>
Variable<T> weighted_sum(const Variable<T>& input, const Tensor<T>& probe) {
  if (probe.shape() != input.shape()) {
    throw DimensionError("weighted_sum: probe shape " +
                         shape_to_string(probe.shape()) + " differs from input " +
                         shape_to_string(input.shape()));
  }
  T s = 0;
  for (std::size_t i = 0; i < probe.numel(); ++i) s += input.value()[i] * probe[i];
  return make_result<T>(Tensor<T>({1}, s), "weighted_sum", {input},
                        [probe](Node<T>& self) {
                          T* d = self.inputs[0]->grad_buffer().ptr();
                          const T g = self.grad[0];
                          for (std::size_t i = 0; i < probe.numel(); ++i) {
                            d[i] += g * probe[i];
                          }
                        });
}

template <typename T>
Variable<T> softmax_cross_entropy(const Variable<T>& logits,
                                  std::span<const int> targets) {
  const Shape& ls = logits.shape();
  require_rank(ls, 2, "softmax_cross_entropy", "logits");
  const std::size_t n = ls[0], k = ls[1];
  if (targets.size() != n) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(n) + " rows");
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= k) {
      throw DomainError("softmax_cross_entropy: target " +
                        std::to_string(targets[r]) + " in row " + std::to_string(r) +
                        " is outside [0, " + std::to_string(k) + ")");
    }
  }
  Tensor<T> logp = log_softmax(logits.value());
  T loss = 0;
  for (std::size_t r = 0; r < n; ++r) loss -= logp[r * k + targets[r]];
  loss /= static_cast<T>(n);
  std::vector<int> tgt(targets.begin(), targets.end());
  return make_result<T>(
      Tensor<T>({1}, loss), "softmax_cross_entropy", {logits},
      [logp = std::move(logp), tgt = std::move(tgt), n, k](Node<T>& self) {
        T* d = self.inputs[0]->grad_buffer().ptr();
        const T g = self.grad[0] / static_cast<T>(n);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t j = 0; j < k; ++j) {
            const T p = std::exp(logp[r * k + j]);
            const T onehot = static_cast<int>(j) == tgt[r] ? T{1} : T{0};
            d[r * k + j] += g * (p - onehot);
          }
        }
      });
}

}  // namespace ops

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& logits) {
  if (logits.rank() != 2) {
    throw DimensionError("log_softmax: logits must be NxK, got " +
                         shape_to_string(logits.shape()));
  }
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor<T> out(logits.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const T* row = logits.ptr() + r * k;
    const T mx = *std::max_element(row, row + k);
    T s = 0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(row[j] - mx);
    const T lse = mx + std::log(s);
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] = row[j] - lse;
  }
  return out;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  Tensor<T> out = log_softmax(logits);
  for (T& v : out.storage()) v = std::exp(v);
  return out;
}

#define MRSPOOF_INSTANTIATE_OPS(T)                                              \
  template struct BatchNormState<T>;                                            \
  template Variable<T> ops::conv2d(const Variable<T>&, const Variable<T>&,      \
                                   const std::optional<Variable<T>>&, Size2,    \
                                   Size2);                                      \
  template Variable<T> ops::maxpool2d(const Variable<T>&, Size2, Size2);        \
  template Variable<T> ops::mfm(const Variable<T>&);                            \
  template Variable<T> ops::linear(const Variable<T>&, const Variable<T>&,      \
                                   const std::optional<Variable<T>>&);          \
  template Variable<T> ops::batchnorm2d(const Variable<T>&, BatchNormState<T>&, \
                                        Mode);                                  \
  template Variable<T> ops::relu(const Variable<T>&);                           \
  template Variable<T> ops::sigmoid(const Variable<T>&);                        \
  template Variable<T> ops::global_avg_pool(const Variable<T>&);                \
  template Variable<T> ops::add(const Variable<T>&, const Variable<T>&);        \
  template Variable<T> ops::channel_scale(const Variable<T>&,                   \
                                          const Variable<T>&);                  \
  template Variable<T> ops::reshape(const Variable<T>&, Shape);                 \
  template Variable<T> ops::flatten(const Variable<T>&);                        \
  template Variable<T> ops::weighted_sum(const Variable<T>&, const Tensor<T>&); \
  template Variable<T> ops::softmax_cross_entropy(const Variable<T>&,           \
                                                  std::span<const int>);        \
  template Tensor<T> log_softmax(const Tensor<T>&);                             \
  template Tensor<T> softmax(const Tensor<T>&);

MRSPOOF_INSTANTIATE_OPS(float)
MRSPOOF_INSTANTIATE_OPS(double)

#undef MRSPOOF_INSTANTIATE_OPS

}  // namespace mrspoof
