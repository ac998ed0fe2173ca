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

#ifndef CONVFEAT_LAYERS_H_
#define CONVFEAT_LAYERS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "convfeat/tensor.h"

// Forward and backward kernels for every layer kind the engine executes.
//
// Kernels are free functions templated on the scalar type (float for
// production, double for gradient checking). Any state a backward pass needs
// (pooling argmax, dropout mask) is returned from the forward call instead of
// being stored, so the parameter structs can be shared by concurrent passes.
namespace convfeat {

template <typename T>
struct BasicConvParams {
  std::size_t stride = 1;
  std::size_t pad = 0;
  BasicTensor<T> weights;  // (K, C, R, S)
  std::vector<T> bias;     // K

  std::size_t out_channels() const { return weights.shape().n; }
  std::size_t in_channels() const { return weights.shape().c; }
  std::size_t kernel_h() const { return weights.shape().h; }
  std::size_t kernel_w() const { return weights.shape().w; }
};
using ConvParams = BasicConvParams<float>;

// Output spatial extent of a strided window; fails unless the division is
// exact and the result is positive.
std::size_t WindowOutputSize(std::size_t in, std::size_t kernel,
                             std::size_t stride, std::size_t pad,
                             const char* what);

template <typename T>
Shape4 ConvOutputShape(const Shape4& in, const BasicConvParams<T>& conv);

// Patch matrix for one image: (C*R*S) x (H'*W'). Column j is the receptive
// field of output position j in row-major order; padding contributes zeros.
template <typename T>
BasicMatrix<T> im2col(const BasicTensor<T>& input, const BasicConvParams<T>& conv);

template <typename T>
BasicTensor<T> conv_forward(const BasicTensor<T>& input,
                            const BasicConvParams<T>& conv);

template <typename T>
struct ConvGrads {
  BasicTensor<T> input;
  BasicTensor<T> weights;
  std::vector<T> bias;
};

template <typename T>
ConvGrads<T> conv_backward(const BasicTensor<T>& input,
                           const BasicConvParams<T>& conv,
                           const BasicTensor<T>& grad_output);

struct PoolParams {
  std::size_t window = 1;
  std::size_t stride = 1;
};

Shape4 PoolOutputShape(const Shape4& in, const PoolParams& pool);

template <typename T>
struct PoolResult {
  BasicTensor<T> output;
  // Linear input index of the winning cell for each output element.
  std::vector<std::size_t> argmax;
};

// Ties go to the lowest linear index inside the window.
template <typename T>
PoolResult<T> maxpool_forward(const BasicTensor<T>& input,
                              const PoolParams& pool);

template <typename T>
BasicTensor<T> maxpool_backward(const Shape4& input_shape,
                                std::span<const std::size_t> argmax,
                                const BasicTensor<T>& grad_output);

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input,
                             const BasicTensor<T>& grad_output);

struct LrnParams {
  std::size_t local_size = 5;
  double alpha = 1e-4;
  double beta = 0.75;
  double k = 2.0;
};

void ValidateLrn(const LrnParams& p);

// out = in / (k + alpha/local_size * sum of squares over the channel window)^beta
template <typename T>
BasicTensor<T> lrn_forward(const BasicTensor<T>& input, const LrnParams& p);

template <typename T>
BasicTensor<T> lrn_backward(const BasicTensor<T>& input, const LrnParams& p,
                            const BasicTensor<T>& grad_output);

template <typename T>
struct BasicFcParams {
  BasicMatrix<T> weights;  // M x D
  std::vector<T> bias;     // M
};
using FcParams = BasicFcParams<float>;

// Input is flattened to N x D; the result has shape (N, M, 1, 1).
template <typename T>
BasicTensor<T> fc_forward(const BasicTensor<T>& input,
                          const BasicFcParams<T>& fc);

template <typename T>
struct FcGrads {
  BasicTensor<T> input;
  BasicMatrix<T> weights;
  std::vector<T> bias;
};

template <typename T>
FcGrads<T> fc_backward(const BasicTensor<T>& input, const BasicFcParams<T>& fc,
                       const BasicTensor<T>& grad_output);

enum class DropoutMode { kTrain, kTest };

struct DropoutState {
  double rate = 0.5;
  DropoutMode mode = DropoutMode::kTest;
  std::uint64_t seed = 0;
};

template <typename T>
struct DropoutResult {
  BasicTensor<T> output;
  std::vector<std::uint8_t> mask;  // train mode only
};

// Non-inverted dropout: train keeps each unit with probability 1 - rate,
// test scales every unit by 1 - rate. Only rate 0.5 is supported.
template <typename T>
DropoutResult<T> dropout_apply(const BasicTensor<T>& input,
                               const DropoutState& state);

template <typename T>
BasicTensor<T> dropout_backward(const DropoutState& state,
                                std::span<const std::uint8_t> mask,
                                const BasicTensor<T>& grad_output);

// Row-wise softmax over each sample's flattened features.
template <typename T>
BasicTensor<T> softmax_forward(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> softmax_backward(const BasicTensor<T>& output,
                                const BasicTensor<T>& grad_output);

}  // namespace convfeat

#endif  // CONVFEAT_LAYERS_H_
