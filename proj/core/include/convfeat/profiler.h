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

#ifndef CONVFEAT_PROFILER_H_
#define CONVFEAT_PROFILER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convfeat/network.h"

namespace convfeat {

// Layer-type buckets used for aggregation: relu and dropout count as
// "neuron", lrn and softmax as "other".
enum class TimeKind { kFc, kConv, kPool, kNeuron, kOther };
inline constexpr std::size_t kNumTimeKinds = 5;

std::string_view TimeKindName(TimeKind kind);
std::optional<TimeKind> ParseTimeKind(std::string_view name);
TimeKind TimeKindOf(LayerKind kind);

struct LayerTiming {
  std::string name;
  TimeKind kind = TimeKind::kOther;
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double median_ms = 0.0;
};

struct TimingProfile {
  std::vector<LayerTiming> layers;
  // Sum of member layer means per TimeKind.
  std::array<double, kNumTimeKinds> kind_ms{};
  // Mean and median wall time of the whole forward pass.
  double total_ms = 0.0;
  double total_median_ms = 0.0;
  std::size_t batch = 0;
  std::size_t repeats = 0;

  // Recomputes kind_ms from layers.
  void Aggregate();
  double LayerSum() const;
  // kind_ms normalized to sum to 1; all zero for an empty profile.
  std::array<double, kNumTimeKinds> Shares() const;
  // Names of the k layers with the largest mean time, most expensive first.
  std::vector<std::string> TopLayers(std::size_t k) const;
};

struct ProfileOptions {
  std::size_t batch = 1;
  std::size_t repeats = 5;
  std::size_t warmup = 1;
  // Engine threads during measurement; restored afterwards.
  int threads = 1;
  std::uint64_t seed = 0;
};

// Times every layer over `repeats` forward passes on a seeded random batch,
// after `warmup` discarded passes.
TimingProfile profile_forward(const Network& net, const ProfileOptions& options);
TimingProfile profile_forward(const NetworkSpec& spec, const WeightBundle& bundle,
                              std::size_t batch, std::size_t repeats,
                              std::size_t warmup);

// Fixed-width text table: one row per layer, then per-kind totals.
std::string RenderProfileTable(const TimingProfile& p);
// SVG pie of kind shares. Each sector carries data-kind, data-start and
// data-end (degrees, clockwise from twelve o'clock).
std::string RenderProfilePie(const TimingProfile& p);

// `layer,kind,mean_ms,std_ms`, values with six decimals.
std::string ProfileToCsv(const TimingProfile& p);
TimingProfile ProfileFromCsv(std::string_view text);

}  // namespace convfeat

#endif  // CONVFEAT_PROFILER_H_
