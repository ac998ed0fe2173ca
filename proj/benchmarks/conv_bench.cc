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

#include <random>

#include "benchmark/benchmark.h"
#include "convfeat/layers.h"

namespace {

using convfeat::ConvParams;
using convfeat::Shape4;
using convfeat::Tensor;

Tensor RandomTensor(Shape4 shape, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  Tensor t(shape);
  for (float& v : t.data()) v = dist(rng);
  return t;
}

// Args: channels, size, filters, kernel, stride, pad.
void BM_ConvForward(benchmark::State& state) {
  const std::size_t c = state.range(0), hw = state.range(1), k = state.range(2);
  const std::size_t r = state.range(3);
  ConvParams params;
  params.stride = state.range(4);
  params.pad = state.range(5);
  params.weights = RandomTensor(Shape4{k, c, r, r}, 1);
  params.bias.assign(k, 0.0f);
  const Tensor input = RandomTensor(Shape4{1, c, hw, hw}, 2);
  for (auto _ : state) {
    Tensor out = convfeat::conv_forward(input, params);
    benchmark::DoNotOptimize(out.data().data());
  }
}
BENCHMARK(BM_ConvForward)
    ->Args({3, 224, 96, 12, 4, 2})
    ->Args({96, 27, 256, 5, 1, 2})
    ->Args({256, 13, 384, 3, 1, 1})
    ->Unit(benchmark::kMillisecond);

void BM_Im2col(benchmark::State& state) {
  ConvParams params;
  params.pad = 2;
  params.weights = Tensor(Shape4{256, 96, 5, 5});
  params.bias.assign(256, 0.0f);
  const Tensor input = RandomTensor(Shape4{1, 96, 27, 27}, 3);
  for (auto _ : state) {
    auto cols = convfeat::im2col(input, params);
    benchmark::DoNotOptimize(cols.data().data());
  }
}
BENCHMARK(BM_Im2col)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
