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
#include "convfeat/network.h"
#include "convfeat/network_spec.h"
#include "convfeat/weights.h"

namespace {

// Whole-network forward pass of the shipped AlexNet-style spec with random
// weights; items/s is images per second.
void BM_AlexNetForward(benchmark::State& state) {
  const convfeat::NetworkSpec spec =
      convfeat::load_spec_file(CONVFEAT_MODELS_DIR "/alexnet.spec");
  const convfeat::Network net(spec, convfeat::random_init(spec, 1));
  const std::size_t batch = state.range(0);
  convfeat::Tensor input(spec.input_shape(batch));
  std::mt19937 rng(2);
  std::normal_distribution<float> dist(0.0f, 50.0f);
  for (float& v : input.data()) v = dist(rng);
  for (auto _ : state) {
    auto acts = net.forward(input, {});
    benchmark::DoNotOptimize(acts);
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_AlexNetForward)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
