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

#ifndef CONVFEAT_EMBED_H_
#define CONVFEAT_EMBED_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "convfeat/features.h"

namespace convfeat {

struct Embedding {
  std::vector<double> coords;  // n x 2, row-major
  std::vector<std::string> ids;
  std::vector<std::string> groups;  // empty, or one per point
  // KL(P || Q) at every checkpoint iteration, without exaggeration.
  std::vector<int> kl_iterations;
  std::vector<double> kl_trace;
  std::size_t jittered_rows = 0;

  std::size_t size() const { return ids.size(); }
  double x(std::size_t i) const { return coords[2 * i]; }
  double y(std::size_t i) const { return coords[2 * i + 1]; }
};

struct TsneOptions {
  double perplexity = 30.0;
  int iters = 1000;
  double learning_rate = 100.0;
  double momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch = 250;
  double exaggeration = 4.0;
  int exaggeration_iters = 100;
  int kl_interval = 50;
  std::uint64_t seed = 0;
};

struct InputAffinities {
  std::size_t n = 0;
  std::vector<double> p;  // n x n, symmetric, sums to 1
  std::vector<double> perplexity;  // achieved per point, before symmetrizing
  // Per-point Gaussian precision: p(j|i) is proportional to
  // exp(-beta[i] * |x_i - x_j|^2).
  std::vector<double> beta;
};

// Gaussian conditional affinities with per-point bandwidth matched to
// `perplexity` by bisection, then symmetrized. Rows are n x dim doubles.
InputAffinities compute_input_affinities(const std::vector<double>& rows,
                                         std::size_t dim, double perplexity);
InputAffinities compute_input_affinities(const FeatureMatrix& f, double perplexity);

// Exact O(n^2) t-SNE to two dimensions. Duplicate rows receive seeded
// N(0, 1e-8) jitter (counted in jittered_rows).
Embedding tsne(const FeatureMatrix& f, const TsneOptions& options);
Embedding tsne(const FeatureMatrix& f, double perplexity, int iters,
               std::uint64_t seed);

// label -> group, from lines `label<TAB>group`; blank and '#' lines skipped.
using GroupMap = std::map<std::string, std::string>;
GroupMap ParseGroupMap(std::string_view text);
GroupMap load_group_map(const std::string& path);

// Group per row: the mapped group, else the label itself.
std::vector<std::string> AssignGroups(const FeatureMatrix& f, const GroupMap& groups);

// Projects to 512 dims first when wider, then runs t-SNE and attaches groups.
Embedding embed_features(const FeatureMatrix& f, const GroupMap& groups,
                         const TsneOptions& options,
                         std::size_t projection_dim = 512);

// Groups missing from `group_colors` take palette colors in sorted order.
std::string render_scatter(const Embedding& e,
                           const std::map<std::string, std::string>& group_colors = {});

// Header `id,group,x,y`.
std::string EmbeddingToCsv(const Embedding& e);

}  // namespace convfeat

#endif  // CONVFEAT_EMBED_H_
