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

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "convfeat/layers.h"
#include "gtest/gtest.h"
#include "testing/oracles.h"

namespace convfeat {
namespace {

using testing::CheckGradient;
using testing::RandomTensor;

constexpr double kTolerance = 1e-4;
constexpr std::size_t kCoords = 400;

std::vector<double> Flat(const TensorD& t) { return {t.data().begin(), t.data().end()}; }

TensorD FromFlat(Shape4 shape, const std::vector<double>& v) { return TensorD(shape, v); }

// Projects a layer output onto fixed random weights so the loss is a scalar
// whose gradient with respect to the output is exactly `probe`.
double Project(const TensorD& out, const TensorD& probe) {
  return std::inner_product(out.data().begin(), out.data().end(), probe.data().begin(), 0.0);
}

class GradCheckTest : public ::testing::Test {
 protected:
  void ExpectGradient(const char* what, const std::function<double(const std::vector<double>&)>& loss,
                      const std::vector<double>& x, const std::vector<double>& analytic) {
    ASSERT_EQ(x.size(), analytic.size()) << what;
    const auto r = CheckGradient(loss, x, analytic, kCoords, rng_);
    EXPECT_GE(r.coords, std::min<std::size_t>(20, x.size())) << what;
    EXPECT_LT(r.max_rel_error, kTolerance) << what;
  }

  std::mt19937_64 rng_{77};
};

TEST_F(GradCheckTest, Convolution) {
  for (const auto& [stride, pad] : {std::pair<std::size_t, std::size_t>{1, 0}, {1, 1}, {2, 1}}) {
    BasicConvParams<double> conv;
    conv.stride = stride;
    conv.pad = pad;
    conv.weights = RandomTensor<double>(Shape4{4, 3, 3, 3}, rng_);
    conv.bias = Flat(RandomTensor<double>(Shape4{1, 4, 1, 1}, rng_));
    const TensorD input = RandomTensor<double>(Shape4{2, 3, 7, 7}, rng_);
    const Shape4 out_shape = ConvOutputShape(input.shape(), conv);
    const TensorD probe = RandomTensor<double>(out_shape, rng_);
    const auto grads = conv_backward(input, conv, probe);

    ExpectGradient("conv input",
                   [&](const std::vector<double>& v) {
                     return Project(conv_forward(FromFlat(input.shape(), v), conv), probe);
                   },
                   Flat(input), Flat(grads.input));
    ExpectGradient("conv weights",
                   [&](const std::vector<double>& v) {
                     auto c = conv;
                     c.weights = FromFlat(conv.weights.shape(), v);
                     return Project(conv_forward(input, c), probe);
                   },
                   Flat(conv.weights), Flat(grads.weights));
    ExpectGradient("conv bias",
                   [&](const std::vector<double>& v) {
                     auto c = conv;
                     c.bias = v;
                     return Project(conv_forward(input, c), probe);
                   },
                   conv.bias, grads.bias);
  }
}

TEST_F(GradCheckTest, MaxPool) {
  // A shuffled ramp has no ties and no two cells within the step of each other.
  TensorD input(Shape4{2, 3, 7, 7});
  std::vector<double> ramp(input.size());
  std::iota(ramp.begin(), ramp.end(), 0.0);
  std::shuffle(ramp.begin(), ramp.end(), rng_);
  for (std::size_t i = 0; i < ramp.size(); ++i) input[i] = 0.01 * ramp[i];
  for (const PoolParams pool : {PoolParams{3, 2}, PoolParams{2, 1}}) {
    const auto fwd = maxpool_forward(input, pool);
    const TensorD probe = RandomTensor<double>(fwd.output.shape(), rng_);
    const TensorD grad = maxpool_backward(input.shape(), fwd.argmax, probe);
    ExpectGradient("maxpool input",
                   [&](const std::vector<double>& v) {
                     return Project(maxpool_forward(FromFlat(input.shape(), v), pool).output,
                                    probe);
                   },
                   Flat(input), Flat(grad));
  }
}

TEST_F(GradCheckTest, Relu) {
  TensorD input = RandomTensor<double>(Shape4{2, 4, 5, 5}, rng_);
  for (double& v : input.data()) {
    if (std::abs(v) < 1e-3) v = 0.5;
  }
  const TensorD probe = RandomTensor<double>(input.shape(), rng_);
  ExpectGradient("relu input",
                 [&](const std::vector<double>& v) {
                   return Project(relu_forward(FromFlat(input.shape(), v)), probe);
                 },
                 Flat(input), Flat(relu_backward(input, probe)));
}

TEST_F(GradCheckTest, LocalResponseNormalization) {
  for (const LrnParams p : {LrnParams{5, 1e-4, 0.75, 2.0}, LrnParams{3, 0.5, 0.75, 1.0},
                            LrnParams{5, 2.0, 0.5, 1.5}}) {
    const TensorD input = RandomTensor<double>(Shape4{2, 7, 3, 3}, rng_, -2.0, 2.0);
    const TensorD probe = RandomTensor<double>(input.shape(), rng_);
    ExpectGradient("lrn input",
                   [&](const std::vector<double>& v) {
                     return Project(lrn_forward(FromFlat(input.shape(), v), p), probe);
                   },
                   Flat(input), Flat(lrn_backward(input, p, probe)));
  }
}

TEST_F(GradCheckTest, FullyConnected) {
  const TensorD input = RandomTensor<double>(Shape4{3, 2, 3, 3}, rng_);
  BasicFcParams<double> fc;
  fc.weights = MatrixD(5, 18, Flat(RandomTensor<double>(Shape4{1, 1, 5, 18}, rng_)));
  fc.bias = Flat(RandomTensor<double>(Shape4{1, 5, 1, 1}, rng_));
  const TensorD probe = RandomTensor<double>(Shape4{3, 5, 1, 1}, rng_);
  const auto grads = fc_backward(input, fc, probe);
  ASSERT_EQ(grads.input.shape(), input.shape());
  ExpectGradient("fc input",
                 [&](const std::vector<double>& v) {
                   return Project(fc_forward(FromFlat(input.shape(), v), fc), probe);
                 },
                 Flat(input), Flat(grads.input));
  ExpectGradient("fc weights",
                 [&](const std::vector<double>& v) {
                   auto f = fc;
                   f.weights = MatrixD(5, 18, v);
                   return Project(fc_forward(input, f), probe);
                 },
                 {fc.weights.data().begin(), fc.weights.data().end()},
                 {grads.weights.data().begin(), grads.weights.data().end()});
  ExpectGradient("fc bias",
                 [&](const std::vector<double>& v) {
                   auto f = fc;
                   f.bias = v;
                   return Project(fc_forward(input, f), probe);
                 },
                 fc.bias, grads.bias);
}

TEST_F(GradCheckTest, DropoutWithFrozenMask) {
  const TensorD input = RandomTensor<double>(Shape4{2, 3, 4, 4}, rng_);
  const TensorD probe = RandomTensor<double>(input.shape(), rng_);
  for (const DropoutMode mode : {DropoutMode::kTrain, DropoutMode::kTest}) {
    const DropoutState state{0.5, mode, 1234};
    const auto fwd = dropout_apply(input, state);
    ExpectGradient("dropout input",
                   [&](const std::vector<double>& v) {
                     // Same seed, so the mask is the one drawn above.
                     return Project(dropout_apply(FromFlat(input.shape(), v), state).output,
                                    probe);
                   },
                   Flat(input), Flat(dropout_backward(state, fwd.mask, probe)));
  }
}

TEST_F(GradCheckTest, Softmax) {
  const TensorD input = RandomTensor<double>(Shape4{3, 6, 1, 1}, rng_, -3.0, 3.0);
  const TensorD probe = RandomTensor<double>(input.shape(), rng_);
  const TensorD out = softmax_forward(input);
  ExpectGradient("softmax input",
                 [&](const std::vector<double>& v) {
                   return Project(softmax_forward(FromFlat(input.shape(), v)), probe);
                 },
                 Flat(input), Flat(softmax_backward(out, probe)));
}

}  // namespace
}  // namespace convfeat
