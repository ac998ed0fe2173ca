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

#ifndef CONVFEAT_WEIGHTS_H_
#define CONVFEAT_WEIGHTS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convfeat/network_spec.h"
#include "convfeat/tensor.h"

namespace convfeat {

struct LayerWeights {
  std::string name;
  Tensor weights;
  std::vector<float> bias;

  bool operator==(const LayerWeights&) const = default;
};

// Named parameter blobs in file order, plus an optional per-pixel mean image
// of shape (1, 3, H, W) subtracted during preprocessing.
struct WeightBundle {
  std::vector<LayerWeights> layers;
  std::optional<Tensor> mean_image;

  const LayerWeights* find(std::string_view name) const;
  LayerWeights* find(std::string_view name);
  bool operator==(const WeightBundle&) const = default;
};

// Every parameterized layer of the spec has an entry of the right shape, and
// every entry belongs to such a layer.
void ValidateBundle(const WeightBundle& bundle, const NetworkSpec& spec);

// .dcf layout, little-endian:
//   "DCF1" u32 layer_count
//   per layer: u32 name_len, name bytes, u32 x4 weight shape, f32 weights,
//              u32 bias_len, f32 bias
//   optional: "MEAN" u32 x4 shape, f32 values
std::string EncodeWeights(const WeightBundle& bundle);
WeightBundle DecodeWeights(std::string_view bytes);

void save_weights(const WeightBundle& bundle, const std::string& path);
WeightBundle load_weights(const std::string& path);
WeightBundle load_weights(const std::string& path, const NetworkSpec& spec);

// Weights ~ N(0, stddev^2), biases zero; deterministic for a seed.
WeightBundle random_init(const NetworkSpec& spec, std::uint64_t seed,
                         float stddev = 0.01f);

}  // namespace convfeat

#endif  // CONVFEAT_WEIGHTS_H_
