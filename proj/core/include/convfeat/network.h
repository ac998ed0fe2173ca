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

#ifndef CONVFEAT_NETWORK_H_
#define CONVFEAT_NETWORK_H_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "convfeat/layers.h"
#include "convfeat/network_spec.h"
#include "convfeat/tensor.h"
#include "convfeat/weights.h"

namespace convfeat {

using Activations = std::map<std::string, Tensor>;

// Called after each layer with its index and elapsed wall time.
using LayerObserver =
    std::function<void(std::size_t, std::chrono::steady_clock::duration)>;

struct ForwardOptions {
  LayerObserver observer;
  // Fail with NonFinite as soon as any layer output has NaN/Inf.
  bool checked = false;
};

// Forward-pass state retained for backpropagation.
struct TrainingPass {
  // inputs[i] is the input to layer i; inputs.back() is the final output.
  std::vector<Tensor> inputs;
  std::vector<std::vector<std::size_t>> pool_argmax;
  std::vector<std::vector<std::uint8_t>> dropout_masks;
  std::vector<DropoutState> dropout_states;
};

struct LayerGradients {
  std::size_t layer = 0;
  Tensor weights;
  std::vector<float> bias;
};

// An executable network: a validated spec with its parameters bound to
// per-layer kernels. Immutable after construction, so forward() may run
// concurrently on disjoint batches.
class Network {
 public:
  Network(NetworkSpec spec, WeightBundle bundle);

  const NetworkSpec& spec() const { return spec_; }
  // Per-sample output shape of every layer.
  const std::vector<Shape4>& output_shapes() const { return shapes_; }
  const std::optional<Tensor>& mean_image() const { return mean_image_; }
  const std::string& terminal_name() const;

  // Test-mode pass over an (N, C, H, W) batch. Returns every requested tap
  // plus the terminal output, keyed by layer name.
  Activations forward(const Tensor& batch, const std::set<std::string>& taps,
                      const ForwardOptions& options = {}) const;

  // Train-mode pass keeping everything backward() needs. Dropout masks are
  // derived from `seed`.
  TrainingPass forward_train(const Tensor& batch, std::uint64_t seed) const;

  // Backpropagates `grad_output`, the loss gradient w.r.t. the output of
  // layer `from_layer`, down to layer 0. Returns gradients for every
  // parameterized layer at or below from_layer.
  std::vector<LayerGradients> backward(const TrainingPass& pass,
                                       std::size_t from_layer,
                                       Tensor grad_output) const;

  WeightBundle weights() const;

  // Flat parameter storage for optimizers; empty for layers without
  // parameters. Weight order matches LayerGradients::weights.
  std::span<float> weight_data(std::size_t layer);
  std::span<float> bias_data(std::size_t layer);

 private:
  struct BoundLayer {
    LayerSpec spec;
    ConvParams conv;
    PoolParams pool;
    FcParams fc;
  };

  void CheckBatch(const Tensor& batch) const;

  NetworkSpec spec_;
  std::vector<Shape4> shapes_;
  std::vector<BoundLayer> layers_;
  std::optional<Tensor> mean_image_;
};

// One-shot convenience over Network.
Activations forward(const NetworkSpec& spec, const WeightBundle& bundle,
                    const Tensor& batch, const std::set<std::string>& taps);

// Concatenates (1, C, H, W) tensors along the batch axis.
Tensor StackBatch(const std::vector<Tensor>& samples);

}  // namespace convfeat

#endif  // CONVFEAT_NETWORK_H_
