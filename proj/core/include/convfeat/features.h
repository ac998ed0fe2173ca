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

#ifndef CONVFEAT_FEATURES_H_
#define CONVFEAT_FEATURES_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convfeat/image.h"
#include "convfeat/layers.h"
#include "convfeat/network.h"

namespace convfeat {

// Rows of layer activations, one per sample, with ids and optional labels.
struct FeatureMatrix {
  std::size_t dim = 0;
  std::vector<float> values;  // rows() x dim, row-major
  std::vector<std::string> ids;
  std::vector<std::string> labels;  // empty, or one per row
  // Provenance: tapped layer and fingerprint of the network spec.
  std::string layer;
  std::string spec_hash;

  std::size_t rows() const { return ids.size(); }
  bool has_labels() const { return !labels.empty(); }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values).subspan(i * dim, dim);
  }
  std::span<float> row(std::size_t i) {
    return std::span<float>(values).subspan(i * dim, dim);
  }

  void append(std::string id, std::span<const float> features,
              std::string label = {});
  // Throws unless rows, ids, labels and values agree and dim > 0.
  void validate() const;
  bool operator==(const FeatureMatrix&) const = default;
};

// Layer whose output serves as the feature for `layer`: the named layer, or
// the last of any relu layers directly following it.
std::size_t ResolveFeatureLayer(const NetworkSpec& spec, std::string_view layer);

struct ExtractOptions {
  std::size_t batch_size = 32;
  PreprocessOptions preprocess;
};

// Row i is the flattened activation for images[i]. Weights stay frozen; the
// result does not depend on batch_size.
FeatureMatrix extract(const Network& net, const std::vector<ImageRecord>& images,
                      std::string_view layer, const ExtractOptions& options = {});

// Train: every entry independently zeroed with probability 0.5. Test: every
// entry scaled by 0.5.
FeatureMatrix feature_dropout(const FeatureMatrix& f, DropoutMode mode,
                              std::uint64_t seed);

// Multiplies rows by a seeded dim x target_dim Gaussian matrix with entries
// N(0, 1/target_dim).
FeatureMatrix random_project(const FeatureMatrix& f, std::size_t target_dim,
                             std::uint64_t seed);

// .fmx layout, little-endian:
//   "FMX1" u32 n, u32 dim
//   ids:    n x (u32 len, bytes)
//   labels: u32 has_labels, then n x (u32 len, bytes) when set
//   provenance: u32 len + layer, u32 len + spec hash
//   values: n*dim f32
std::string EncodeFeatures(const FeatureMatrix& f);
FeatureMatrix DecodeFeatures(std::string_view bytes);
void save_features(const FeatureMatrix& f, const std::string& path);
FeatureMatrix load_features(const std::string& path);

// Header `id,label,f0,...,f{dim-1}`; floats printed with 9 significant digits.
std::string FeaturesToCsv(const FeatureMatrix& f);

}  // namespace convfeat

#endif  // CONVFEAT_FEATURES_H_
