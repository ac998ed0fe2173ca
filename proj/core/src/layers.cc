// Copyright 2026 The convfeat Authors.
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

#include "convfeat/layers.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace convfeat {

std::size_t WindowOutputSize(std::size_t in, std::size_t kernel,
                             std::size_t stride, std::size_t pad,
                             const char* what) {
  if (kernel == 0 || stride == 0) {
    Fail(ErrorCode::kDimensionMismatch,
         std::string(what) + ": kernel and stride must be positive");
  }
  const std::size_t padded = in + 2 * pad;
  if (padded < kernel) {
    Fail(ErrorCode::kDimensionMismatch,
         std::string(what) + ": window " + std::to_string(kernel) +
             " exceeds padded extent " + std::to_string(padded));
  }
  if ((padded - kernel) % stride != 0) {
    Fail(ErrorCode::kDimensionMismatch,
         std::string(what) + ": (" + std::to_string(in) + " + 2*" +
             std::to_string(pad) + " - " + std::to_string(kernel) +
             ") is not divisible by stride " + std::to_string(stride));
  }
  return (padded - kernel) / stride + 1;
}

template <typename T>
Shape4 ConvOutputShape(const Shape4& in, const BasicConvParams<T>& conv) {
  if (in.c != conv.in_channels()) {
    Fail(ErrorCode::kDimensionMismatch,
         "conv expects " + std::to_string(conv.in_channels()) +
             " input channels, got " + std::to_string(in.c));
  }
  if (conv.bias.size() != conv.out_channels()) {
    Fail(ErrorCode::kDimensionMismatch,
         "conv bias length " + std::to_string(conv.bias.size()) +
             " does not match " + std::to_string(conv.out_channels()) +
             " output channels");
  }
  return Shape4{in.n, conv.out_channels(),
                WindowOutputSize(in.h, conv.kernel_h(), conv.stride, conv.pad,
                                 "conv height"),
                WindowOutputSize(in.w, conv.kernel_w(), conv.stride, conv.pad,
                                 "conv width")};
}

namespace {

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t kernel_h, kernel_w, stride, pad;
  std::size_t out_h, out_w;

  std::size_t patch() const { return channels * kernel_h * kernel_w; }
  std::size_t positions() const { return out_h * out_w; }
};

template <typename T>
ConvGeometry GeometryOf(const Shape4& in, const BasicConvParams<T>& conv) {
  const Shape4 out = ConvOutputShape(in, conv);
  return ConvGeometry{in.c,         in.h,      in.w,  conv.kernel_h(),
                      conv.kernel_w(), conv.stride, conv.pad, out.h,
                      out.w};
}

template <typename T>
void Im2ColInto(const T* image, const ConvGeometry& g, T* cols) {
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t r = 0; r < g.kernel_h; ++r) {
      for (std::size_t s = 0; s < g.kernel_w; ++s) {
        T* row = cols + ((c * g.kernel_h + r) * g.kernel_w + s) * positions;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const std::ptrdiff_t ih =
              static_cast<std::ptrdiff_t>(oh * g.stride + r) -
              static_cast<std::ptrdiff_t>(g.pad);
          T* dst = row + oh * g.out_w;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.height)) {
            std::fill(dst, dst + g.out_w, T{0});
            continue;
          }
          const T* src = image + (c * g.height + ih) * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow * g.stride + s) -
                static_cast<std::ptrdiff_t>(g.pad);
            dst[ow] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.width))
                          ? T{0}
                          : src[iw];
          }
        }
      }
    }
  }
}

// Adjoint of Im2ColInto: scatter-adds columns back onto the image.
template <typename T>
void Col2ImAdd(const T* cols, const ConvGeometry& g, T* image) {
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t r = 0; r < g.kernel_h; ++r) {
      for (std::size_t s = 0; s < g.kernel_w; ++s) {
        const T* row =
            cols + ((c * g.kernel_h + r) * g.kernel_w + s) * positions;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const std::ptrdiff_t ih =
              static_cast<std::ptrdiff_t>(oh * g.stride + r) -
              static_cast<std::ptrdiff_t>(g.pad);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.height)) continue;
          T* dst = image + (c * g.height + ih) * g.width;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow * g.stride + s) -
                static_cast<std::ptrdiff_t>(g.pad);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.width)) continue;
            dst[iw] += row[oh * g.out_w + ow];
          }
        }
      }
    }
  }
}

void CheckSameShape(const Shape4& a, const Shape4& b, const char* what) {
  if (!(a == b)) {
    Fail(ErrorCode::kDimensionMismatch,
         std::string(what) + ": shape " + ToString(a) + " vs " + ToString(b));
  }
}

}  // namespace

template <typename T>
BasicMatrix<T> im2col(const BasicTensor<T>& input,
                      const BasicConvParams<T>& conv) {
  if (input.shape().n != 1) {
    Fail(ErrorCode::kDimensionMismatch, "im2col takes a single image");
  }
  const ConvGeometry g = GeometryOf(input.shape(), conv);
  BasicMatrix<T> cols(g.patch(), g.positions());
  Im2ColInto(input.data().data(), g, cols.data().data());
  return cols;
}

template <typename T>
BasicTensor<T> conv_forward(const BasicTensor<T>& input,
                            const BasicConvParams<T>& conv) {
  const Shape4 out_shape = ConvOutputShape(input.shape(), conv);
  const ConvGeometry g = GeometryOf(input.shape(), conv);
  BasicTensor<T> out(out_shape);
  std::vector<T> cols(g.patch() * g.positions());
  const std::size_t k = conv.out_channels();
  for (std::size_t n = 0; n < input.shape().n; ++n) {
    Im2ColInto(input.sample(n).data(), g, cols.data());
    T* dst = out.sample(n).data();
    GemmStrided(Transpose::kNo, Transpose::kNo, k, g.positions(), g.patch(),
                T{1}, conv.weights.data().data(), g.patch(), cols.data(),
                g.positions(), T{0}, dst, g.positions());
    for (std::size_t ch = 0; ch < k; ++ch) {
      T* plane = dst + ch * g.positions();
      const T b = conv.bias[ch];
      for (std::size_t i = 0; i < g.positions(); ++i) plane[i] += b;
    }
  }
  return out;
}

template <typename T>
ConvGrads<T> conv_backward(const BasicTensor<T>& input,
                           const BasicConvParams<T>& conv,
                           const BasicTensor<T>& grad_output) {
  const Shape4 out_shape = ConvOutputShape(input.shape(), conv);
  CheckSameShape(grad_output.shape(), out_shape, "conv_backward grad_output");
  const ConvGeometry g = GeometryOf(input.shape(), conv);
  const std::size_t k = conv.out_channels();
  ConvGrads<T> grads{BasicTensor<T>(input.shape()),
                     BasicTensor<T>(conv.weights.shape()),
                     std::vector<T>(k, T{0})};
  std::vector<T> cols(g.patch() * g.positions());
  std::vector<T> grad_cols(g.patch() * g.positions());
  for (std::size_t n = 0; n < input.shape().n; ++n) {
    const T* gout = grad_output.sample(n).data();
    Im2ColInto(input.sample(n).data(), g, cols.data());
    // dW += dY (K x P) * cols^T (P x CRS)
    GemmStrided(Transpose::kNo, Transpose::kYes, k, g.patch(), g.positions(),
                T{1}, gout, g.positions(), cols.data(), g.positions(), T{1},
                grads.weights.data().data(), g.patch());
    // dcols = W^T (CRS x K) * dY (K x P)
    GemmStrided(Transpose::kYes, Transpose::kNo, g.patch(), g.positions(), k,
                T{1}, conv.weights.data().data(), g.patch(), gout,
                g.positions(), T{0}, grad_cols.data(), g.positions());
    Col2ImAdd(grad_cols.data(), g, grads.input.sample(n).data());
    for (std::size_t ch = 0; ch < k; ++ch) {
      const T* plane = gout + ch * g.positions();
      for (std::size_t i = 0; i < g.positions(); ++i) grads.bias[ch] += plane[i];
    }
  }
  return grads;
}

Shape4 PoolOutputShape(const Shape4& in, const PoolParams& pool) {
  return Shape4{in.n, in.c,
                WindowOutputSize(in.h, pool.window, pool.stride, 0,
                                 "pool height"),
                WindowOutputSize(in.w, pool.window, pool.stride, 0,
                                 "pool width")};
}

template <typename T>
PoolResult<T> maxpool_forward(const BasicTensor<T>& input,
                              const PoolParams& pool) {
  const Shape4 in = input.shape();
  const Shape4 os = PoolOutputShape(in, pool);
  PoolResult<T> result{BasicTensor<T>(os), std::vector<std::size_t>(os.size())};
  std::size_t o = 0;
  for (std::size_t n = 0; n < in.n; ++n) {
    for (std::size_t c = 0; c < in.c; ++c) {
      for (std::size_t oh = 0; oh < os.h; ++oh) {
        for (std::size_t ow = 0; ow < os.w; ++ow, ++o) {
          std::size_t best = input.offset(n, c, oh * pool.stride,
                                          ow * pool.stride);
          T best_value = input[best];
          for (std::size_t r = 0; r < pool.window; ++r) {
            for (std::size_t s = 0; s < pool.window; ++s) {
              const std::size_t idx = input.offset(
                  n, c, oh * pool.stride + r, ow * pool.stride + s);
              // Strict comparison keeps the earliest (lowest index) maximum.
              if (input[idx] > best_value) {
                best_value = input[idx];
                best = idx;
              }
            }
          }
          result.output[o] = best_value;
          result.argmax[o] = best;
        }
      }
    }
  }
  return result;
}

template <typename T>
BasicTensor<T> maxpool_backward(const Shape4& input_shape,
                                std::span<const std::size_t> argmax,
                                const BasicTensor<T>& grad_output) {
  if (argmax.size() != grad_output.size()) {
    Fail(ErrorCode::kStateMissing,
         "maxpool backward needs the argmax recorded by its forward pass");
  }
  BasicTensor<T> grad(input_shape);
  for (std::size_t o = 0; o < argmax.size(); ++o) {
    if (argmax[o] >= grad.size()) {
      Fail(ErrorCode::kStateMissing, "maxpool argmax index out of range");
    }
    grad[argmax[o]] += grad_output[o];
  }
  return grad;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
  BasicTensor<T> out = input;
  for (T& v : out.data()) v = std::max(v, T{0});
  return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input,
                             const BasicTensor<T>& grad_output) {
  CheckSameShape(input.shape(), grad_output.shape(), "relu_backward");
  BasicTensor<T> grad(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    grad[i] = input[i] > T{0} ? grad_output[i] : T{0};
  }
  return grad;
}

void ValidateLrn(const LrnParams& p) {
  if (p.local_size == 0 || p.local_size % 2 == 0) {
    Fail(ErrorCode::kInvalidArgument, "lrn local_size must be odd and >= 1");
  }
  if (!(p.k > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "lrn k must be positive");
  }
}

namespace {

// scale[n,c,h,w] = k + alpha/local_size * sum_{c' in window(c)} in[n,c',h,w]^2
template <typename T>
std::vector<T> LrnScale(const BasicTensor<T>& input, const LrnParams& p) {
  const Shape4 s = input.shape();
  const std::size_t plane = s.h * s.w;
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(p.local_size / 2);
  const T coeff = static_cast<T>(p.alpha / static_cast<double>(p.local_size));
  std::vector<T> scale(input.size());
  for (std::size_t n = 0; n < s.n; ++n) {
    const T* x = input.sample(n).data();
    T* sc = scale.data() + n * s.sample_size();
    for (std::size_t c = 0; c < s.c; ++c) {
      const std::ptrdiff_t lo =
          std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(c) - half);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(
          static_cast<std::ptrdiff_t>(s.c) - 1,
          static_cast<std::ptrdiff_t>(c) + half);
      T* dst = sc + c * plane;
      std::fill(dst, dst + plane, T{0});
      for (std::ptrdiff_t cc = lo; cc <= hi; ++cc) {
        const T* src = x + cc * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] += src[i] * src[i];
      }
      for (std::size_t i = 0; i < plane; ++i) {
        dst[i] = static_cast<T>(p.k) + coeff * dst[i];
      }
    }
  }
  return scale;
}

}  // namespace

template <typename T>
BasicTensor<T> lrn_forward(const BasicTensor<T>& input, const LrnParams& p) {
  ValidateLrn(p);
  const std::vector<T> scale = LrnScale(input, p);
  BasicTensor<T> out(input.shape());
  const T beta = static_cast<T>(p.beta);
  for (std::size_t i = 0; i < input.size(); ++i) {
    out[i] = input[i] * std::pow(scale[i], -beta);
  }
  return out;
}

template <typename T>
BasicTensor<T> lrn_backward(const BasicTensor<T>& input, const LrnParams& p,
                            const BasicTensor<T>& grad_output) {
  ValidateLrn(p);
  CheckSameShape(input.shape(), grad_output.shape(), "lrn_backward");
  const Shape4 s = input.shape();
  const std::size_t plane = s.h * s.w;
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(p.local_size / 2);
  const T beta = static_cast<T>(p.beta);
  const T coeff = static_cast<T>(2.0 * p.alpha * p.beta /
                                 static_cast<double>(p.local_size));
  const std::vector<T> scale = LrnScale(input, p);
  // ratio = g * x * scale^(-beta-1), summed over the window of each channel.
  std::vector<T> ratio(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    ratio[i] = grad_output[i] * input[i] * std::pow(scale[i], -beta - T{1});
  }
  BasicTensor<T> grad(s);
  for (std::size_t n = 0; n < s.n; ++n) {
    const std::size_t base = n * s.sample_size();
    for (std::size_t c = 0; c < s.c; ++c) {
      const std::ptrdiff_t lo =
          std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(c) - half);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(
          static_cast<std::ptrdiff_t>(s.c) - 1,
          static_cast<std::ptrdiff_t>(c) + half);
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t idx = base + c * plane + i;
        T acc = T{0};
        for (std::ptrdiff_t cc = lo; cc <= hi; ++cc) {
          acc += ratio[base + cc * plane + i];
        }
        grad[idx] = grad_output[idx] * std::pow(scale[idx], -beta) -
                    coeff * input[idx] * acc;
      }
    }
  }
  return grad;
}

template <typename T>
BasicTensor<T> fc_forward(const BasicTensor<T>& input,
                          const BasicFcParams<T>& fc) {
  const std::size_t n = input.shape().n;
  const std::size_t d = input.shape().sample_size();
  const std::size_t m = fc.weights.rows();
  if (fc.weights.cols() != d) {
    Fail(ErrorCode::kDimensionMismatch,
         "fc expects " + std::to_string(fc.weights.cols()) +
             " input features, got " + std::to_string(d));
  }
  if (fc.bias.size() != m) {
    Fail(ErrorCode::kDimensionMismatch, "fc bias length mismatch");
  }
  BasicTensor<T> out(Shape4{n, m, 1, 1});
  GemmStrided(Transpose::kNo, Transpose::kYes, n, m, d, T{1},
              input.data().data(), d, fc.weights.data().data(), d, T{0},
              out.data().data(), m);
  for (std::size_t i = 0; i < n; ++i) {
    T* row = out.sample(i).data();
    for (std::size_t j = 0; j < m; ++j) row[j] += fc.bias[j];
  }
  return out;
}

template <typename T>
FcGrads<T> fc_backward(const BasicTensor<T>& input, const BasicFcParams<T>& fc,
                       const BasicTensor<T>& grad_output) {
  const std::size_t n = input.shape().n;
  const std::size_t d = input.shape().sample_size();
  const std::size_t m = fc.weights.rows();
  if (fc.weights.cols() != d || grad_output.shape().n != n ||
      grad_output.shape().sample_size() != m) {
    Fail(ErrorCode::kDimensionMismatch, "fc_backward shape mismatch");
  }
  FcGrads<T> grads{BasicTensor<T>(input.shape()), BasicMatrix<T>(m, d),
                   std::vector<T>(m, T{0})};
  // dX = dY (N x M) * W (M x D)
  GemmStrided(Transpose::kNo, Transpose::kNo, n, d, m, T{1},
              grad_output.data().data(), m, fc.weights.data().data(), d, T{0},
              grads.input.data().data(), d);
  // dW = dY^T (M x N) * X (N x D)
  GemmStrided(Transpose::kYes, Transpose::kNo, m, d, n, T{1},
              grad_output.data().data(), m, input.data().data(), d, T{0},
              grads.weights.data().data(), d);
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = grad_output.sample(i).data();
    for (std::size_t j = 0; j < m; ++j) grads.bias[j] += row[j];
  }
  return grads;
}

namespace {

void CheckDropoutRate(const DropoutState& state) {
  if (state.rate != 0.5) {
    Fail(ErrorCode::kInvalidArgument, "dropout rate must be 0.5");
  }
}

}  // namespace

template <typename T>
DropoutResult<T> dropout_apply(const BasicTensor<T>& input,
                               const DropoutState& state) {
  CheckDropoutRate(state);
  DropoutResult<T> result{BasicTensor<T>(input.shape()), {}};
  if (state.mode == DropoutMode::kTest) {
    for (std::size_t i = 0; i < input.size(); ++i) {
      result.output[i] = input[i] * T{0.5};
    }
    return result;
  }
  // One fair bit per unit, drawn 64 at a time.
  std::mt19937_64 rng(state.seed);
  result.mask.resize(input.size());
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (i % 64 == 0) bits = rng();
    result.mask[i] = static_cast<std::uint8_t>((bits >> (i % 64)) & 1u);
    result.output[i] = result.mask[i] ? input[i] : T{0};
  }
  return result;
}

template <typename T>
BasicTensor<T> dropout_backward(const DropoutState& state,
                                std::span<const std::uint8_t> mask,
                                const BasicTensor<T>& grad_output) {
  CheckDropoutRate(state);
  BasicTensor<T> grad(grad_output.shape());
  if (state.mode == DropoutMode::kTest) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
      grad[i] = grad_output[i] * T{0.5};
    }
    return grad;
  }
  if (mask.size() != grad_output.size()) {
    Fail(ErrorCode::kStateMissing,
         "dropout backward needs the mask from its train-mode forward pass");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = mask[i] ? grad_output[i] : T{0};
  }
  return grad;
}

template <typename T>
BasicTensor<T> softmax_forward(const BasicTensor<T>& input) {
  BasicTensor<T> out(input.shape());
  for (std::size_t n = 0; n < input.shape().n; ++n) {
    std::span<const T> x = input.sample(n);
    std::span<T> y = out.sample(n);
    if (x.empty()) continue;
    const T max = *std::max_element(x.begin(), x.end());
    T sum = T{0};
    for (std::size_t i = 0; i < x.size(); ++i) {
      y[i] = std::exp(x[i] - max);
      sum += y[i];
    }
    for (T& v : y) v /= sum;
  }
  return out;
}

template <typename T>
BasicTensor<T> softmax_backward(const BasicTensor<T>& output,
                                const BasicTensor<T>& grad_output) {
  CheckSameShape(output.shape(), grad_output.shape(), "softmax_backward");
  BasicTensor<T> grad(output.shape());
  for (std::size_t n = 0; n < output.shape().n; ++n) {
    std::span<const T> y = output.sample(n);
    std::span<const T> g = grad_output.sample(n);
    std::span<T> dx = grad.sample(n);
    T dot = T{0};
    for (std::size_t i = 0; i < y.size(); ++i) dot += g[i] * y[i];
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] = y[i] * (g[i] - dot);
  }
  return grad;
}

#define CONVFEAT_INSTANTIATE_LAYERS(T)                                       \
  template Shape4 ConvOutputShape<T>(const Shape4&,                          \
                                     const BasicConvParams<T>&);             \
  template BasicMatrix<T> im2col<T>(const BasicTensor<T>&,                   \
                                    const BasicConvParams<T>&);              \
  template BasicTensor<T> conv_forward<T>(const BasicTensor<T>&,             \
                                          const BasicConvParams<T>&);        \
  template ConvGrads<T> conv_backward<T>(const BasicTensor<T>&,              \
                                         const BasicConvParams<T>&,          \
                                         const BasicTensor<T>&);             \
  template PoolResult<T> maxpool_forward<T>(const BasicTensor<T>&,           \
                                            const PoolParams&);              \
  template BasicTensor<T> maxpool_backward<T>(                               \
      const Shape4&, std::span<const std::size_t>, const BasicTensor<T>&);   \
  template BasicTensor<T> relu_forward<T>(const BasicTensor<T>&);            \
  template BasicTensor<T> relu_backward<T>(const BasicTensor<T>&,            \
                                           const BasicTensor<T>&);           \
  template BasicTensor<T> lrn_forward<T>(const BasicTensor<T>&,              \
                                         const LrnParams&);                  \
  template BasicTensor<T> lrn_backward<T>(                                   \
      const BasicTensor<T>&, const LrnParams&, const BasicTensor<T>&);       \
  template BasicTensor<T> fc_forward<T>(const BasicTensor<T>&,               \
                                        const BasicFcParams<T>&);            \
  template FcGrads<T> fc_backward<T>(const BasicTensor<T>&,                  \
                                     const BasicFcParams<T>&,                \
                                     const BasicTensor<T>&);                 \
  template DropoutResult<T> dropout_apply<T>(const BasicTensor<T>&,          \
                                             const DropoutState&);           \
  template BasicTensor<T> dropout_backward<T>(                               \
      const DropoutState&, std::span<const std::uint8_t>,                    \
      const BasicTensor<T>&);                                                \
  template BasicTensor<T> softmax_forward<T>(const BasicTensor<T>&);         \
  template BasicTensor<T> softmax_backward<T>(const BasicTensor<T>&,         \
                                              const BasicTensor<T>&);

CONVFEAT_INSTANTIATE_LAYERS(float)
CONVFEAT_INSTANTIATE_LAYERS(double)

#undef CONVFEAT_INSTANTIATE_LAYERS

}  // namespace convfeat
