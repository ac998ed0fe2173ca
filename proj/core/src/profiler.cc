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

#include "convfeat/profiler.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "convfeat/parallel.h"

namespace convfeat {

namespace {

constexpr std::array<std::string_view, kNumTimeKinds> kKindNames = {
    "fc", "conv", "pool", "neuron", "other"};
constexpr std::array<const char*, kNumTimeKinds> kKindColors = {
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#7f7f7f"};

double Mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double SampleStd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = Mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double Ms(std::chrono::steady_clock::duration d) {
  return std::chrono::duration<double, std::milli>(d).count();
}

class ThreadScope {
 public:
  explicit ThreadScope(int threads) : saved_(NumThreads()) { SetNumThreads(threads); }
  ~ThreadScope() { SetNumThreads(saved_); }

 private:
  int saved_;
};

std::string Printf(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

}  // namespace

std::string_view TimeKindName(TimeKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<TimeKind> ParseTimeKind(std::string_view name) {
  for (std::size_t k = 0; k < kNumTimeKinds; ++k) {
    if (kKindNames[k] == name) return static_cast<TimeKind>(k);
  }
  return std::nullopt;
}

TimeKind TimeKindOf(LayerKind kind) {
  switch (kind) {
    case LayerKind::kFc: return TimeKind::kFc;
    case LayerKind::kConv: return TimeKind::kConv;
    case LayerKind::kPool: return TimeKind::kPool;
    case LayerKind::kRelu:
    case LayerKind::kDropout: return TimeKind::kNeuron;
    case LayerKind::kLrn:
    case LayerKind::kSoftmax: return TimeKind::kOther;
  }
  return TimeKind::kOther;
}

void TimingProfile::Aggregate() {
  kind_ms.fill(0.0);
  for (const LayerTiming& l : layers) kind_ms[static_cast<std::size_t>(l.kind)] += l.mean_ms;
}

double TimingProfile::LayerSum() const {
  double s = 0.0;
  for (const LayerTiming& l : layers) s += l.mean_ms;
  return s;
}

std::array<double, kNumTimeKinds> TimingProfile::Shares() const {
  std::array<double, kNumTimeKinds> shares{};
  const double sum = std::accumulate(kind_ms.begin(), kind_ms.end(), 0.0);
  if (sum <= 0.0) return shares;
  for (std::size_t k = 0; k < kNumTimeKinds; ++k) shares[k] = kind_ms[k] / sum;
  return shares;
}

std::vector<std::string> TimingProfile::TopLayers(std::size_t k) const {
  std::vector<std::size_t> order(layers.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return layers[a].mean_ms > layers[b].mean_ms;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
    out.push_back(layers[order[i]].name);
  }
  return out;
}

TimingProfile profile_forward(const Network& net, const ProfileOptions& options) {
  if (options.repeats < 3) Fail(ErrorCode::kInvalidArgument, "profiling needs >= 3 repeats");
  if (options.warmup < 1) Fail(ErrorCode::kInvalidArgument, "profiling needs >= 1 warmup pass");
  if (options.batch < 1) Fail(ErrorCode::kInvalidArgument, "batch must be >= 1");
  ThreadScope threads(options.threads);

  const NetworkSpec& spec = net.spec();
  Tensor batch(spec.input_shape(options.batch));
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<float> noise(0.0f, 1.0f);
  for (float& v : batch.data()) v = noise(rng);

  const std::size_t n_layers = spec.layers.size();
  std::vector<std::vector<double>> samples(n_layers);
  std::vector<double> totals;
  ForwardOptions fwd;
  bool recording = false;
  fwd.observer = [&](std::size_t layer, std::chrono::steady_clock::duration d) {
    if (recording) samples[layer].push_back(Ms(d));
  };
  for (std::size_t r = 0; r < options.warmup + options.repeats; ++r) {
    recording = r >= options.warmup;
    const auto start = std::chrono::steady_clock::now();
    net.forward(batch, {}, fwd);
    const auto elapsed = std::chrono::steady_clock::now() - start;
    if (recording) totals.push_back(Ms(elapsed));
  }

  TimingProfile p;
  p.batch = options.batch;
  p.repeats = options.repeats;
  for (std::size_t i = 0; i < n_layers; ++i) {
    LayerTiming t;
    t.name = spec.layers[i].name;
    t.kind = TimeKindOf(spec.layers[i].kind);
    t.mean_ms = Mean(samples[i]);
    t.std_ms = SampleStd(samples[i]);
    t.median_ms = Median(samples[i]);
    p.layers.push_back(std::move(t));
  }
  p.Aggregate();
  p.total_ms = Mean(totals);
  p.total_median_ms = Median(totals);
  return p;
}

TimingProfile profile_forward(const NetworkSpec& spec, const WeightBundle& bundle,
                              std::size_t batch, std::size_t repeats,
                              std::size_t warmup) {
  ProfileOptions options;
  options.batch = batch;
  options.repeats = repeats;
  options.warmup = warmup;
  return profile_forward(Network(spec, bundle), options);
}

std::string RenderProfileTable(const TimingProfile& p) {
  const double sum = p.LayerSum();
  std::string out = Printf("%-16s %-7s %12s %12s %12s %8s\n", "layer", "kind",
                           "mean_ms", "std_ms", "median_ms", "share");
  out += std::string(72, '-') + "\n";
  for (const LayerTiming& l : p.layers) {
    out += Printf("%-16s %-7s %12.3f %12.3f %12.3f %7.2f%%\n", l.name.c_str(),
                  std::string(TimeKindName(l.kind)).c_str(), l.mean_ms, l.std_ms,
                  l.median_ms, sum > 0.0 ? 100.0 * l.mean_ms / sum : 0.0);
  }
  out += std::string(72, '-') + "\n";
  const auto shares = p.Shares();
  for (std::size_t k = 0; k < kNumTimeKinds; ++k) {
    out += Printf("%-16s %-7s %12.3f %12s %12s %7.2f%%\n", "kind total",
                  std::string(kKindNames[k]).c_str(), p.kind_ms[k], "", "",
                  100.0 * shares[k]);
  }
  out += Printf("%-16s %-7s %12.3f %12s %12.3f\n", "forward", "", p.total_ms, "",
                p.total_median_ms);
  out += Printf("batch %zu, %zu repeats\n", p.batch, p.repeats);
  return out;
}

std::string RenderProfilePie(const TimingProfile& p) {
  constexpr double kCx = 200.0, kCy = 200.0, kR = 160.0;
  const auto shares = p.Shares();
  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"560\" height=\"400\" "
         "viewBox=\"0 0 560 400\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"560\" height=\"400\" fill=\"white\"/>\n";
  svg += "<g class=\"sectors\" stroke=\"white\">\n";
  auto point = [&](double deg) {
    const double rad = deg * std::acos(-1.0) / 180.0;
    return Printf("%.3f %.3f", kCx + kR * std::sin(rad), kCy - kR * std::cos(rad));
  };
  double start = 0.0;
  for (std::size_t k = 0; k < kNumTimeKinds; ++k) {
    if (shares[k] <= 0.0) continue;
    const double end = start + 360.0 * shares[k];
    const std::string attrs =
        Printf("data-kind=\"%s\" data-start=\"%.3f\" data-end=\"%.3f\" fill=\"%s\"",
               std::string(kKindNames[k]).c_str(), start, end, kKindColors[k]);
    if (shares[k] >= 1.0) {
      svg += Printf("<circle cx=\"%.3f\" cy=\"%.3f\" r=\"%.3f\" ", kCx, kCy, kR) +
             attrs + "/>\n";
    } else {
      svg += "<path d=\"M " + Printf("%.3f %.3f", kCx, kCy) + " L " + point(start) +
             Printf(" A %.3f %.3f 0 %d 1 ", kR, kR, end - start > 180.0 ? 1 : 0) +
             point(end) + " Z\" " + attrs + "/>\n";
    }
    start = end;
  }
  svg += "</g>\n<g class=\"legend\" font-family=\"sans-serif\" font-size=\"14\">\n";
  std::size_t row = 0;
  for (std::size_t k = 0; k < kNumTimeKinds; ++k) {
    if (static_cast<TimeKind>(k) == TimeKind::kOther && shares[k] <= 0.0) continue;
    const double y = 40.0 + 24.0 * static_cast<double>(row++);
    svg += Printf("<rect x=\"400\" y=\"%.0f\" width=\"14\" height=\"14\" fill=\"%s\"/>\n",
                  y - 12.0, kKindColors[k]);
    svg += Printf("<text x=\"420\" y=\"%.0f\">%s %.1f%%</text>\n", y,
                  std::string(kKindNames[k]).c_str(), 100.0 * shares[k]);
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

std::string ProfileToCsv(const TimingProfile& p) {
  std::string out = "layer,kind,mean_ms,std_ms\n";
  for (const LayerTiming& l : p.layers) {
    out += l.name + "," + std::string(TimeKindName(l.kind)) +
           Printf(",%.6f,%.6f\n", l.mean_ms, l.std_ms);
  }
  return out;
}

TimingProfile ProfileFromCsv(std::string_view text) {
  TimingProfile p;
  std::size_t line_no = 0;
  auto parse_double = [&](std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      Fail(ErrorCode::kParseError, "profile CSV line " + std::to_string(line_no) +
                                       ": bad number '" + std::string(s) + "'");
    }
    return v;
  };
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view() : text.substr(eol + 1);
    ++line_no;
    if (line_no == 1) {
      if (line != "layer,kind,mean_ms,std_ms") {
        Fail(ErrorCode::kParseError, "profile CSV has an unexpected header");
      }
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (fields.size() != 4) {
      Fail(ErrorCode::kParseError,
           "profile CSV line " + std::to_string(line_no) + ": expected 4 fields");
    }
    const auto kind = ParseTimeKind(fields[1]);
    if (!kind) {
      Fail(ErrorCode::kParseError, "profile CSV line " + std::to_string(line_no) +
                                       ": unknown kind '" + std::string(fields[1]) + "'");
    }
    LayerTiming t;
    t.name = std::string(fields[0]);
    t.kind = *kind;
    t.mean_ms = parse_double(fields[2]);
    t.std_ms = parse_double(fields[3]);
    t.median_ms = t.mean_ms;
    p.layers.push_back(std::move(t));
  }
  if (line_no == 0) Fail(ErrorCode::kParseError, "profile CSV is empty");
  p.Aggregate();
  p.total_ms = p.LayerSum();
  p.total_median_ms = p.total_ms;
  return p;
}

}  // namespace convfeat
