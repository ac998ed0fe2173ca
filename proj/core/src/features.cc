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

#include "convfeat/features.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "convfeat/io.h"

namespace convfeat {

void FeatureMatrix::append(std::string id, std::span<const float> features,
                           std::string label) {
  if (features.size() != dim) {
    Fail(ErrorCode::kDimensionMismatch,
         "row has " + std::to_string(features.size()) + " features, matrix has " +
             std::to_string(dim));
  }
  if (!label.empty() && labels.size() != ids.size()) {
    Fail(ErrorCode::kInvalidArgument, "cannot mix labeled and unlabeled rows");
  }
  if (label.empty() && !labels.empty()) {
    Fail(ErrorCode::kInvalidArgument, "cannot mix labeled and unlabeled rows");
  }
  ids.push_back(std::move(id));
  if (!label.empty()) labels.push_back(std::move(label));
  values.insert(values.end(), features.begin(), features.end());
}

void FeatureMatrix::validate() const {
  if (dim == 0) Fail(ErrorCode::kDimensionMismatch, "feature dim must be positive");
  if (values.size() != ids.size() * dim) {
    Fail(ErrorCode::kDimensionMismatch, "feature values do not match row count");
  }
  if (!labels.empty() && labels.size() != ids.size()) {
    Fail(ErrorCode::kDimensionMismatch, "label count does not match row count");
  }
}

std::size_t ResolveFeatureLayer(const NetworkSpec& spec, std::string_view layer) {
  const std::optional<std::size_t> found = spec.find(layer);
  if (!found) {
    Fail(ErrorCode::kUnknownTap, "no layer named '" + std::string(layer) + "'");
  }
  std::size_t index = *found;
  while (index + 1 < spec.layers.size() &&
         spec.layers[index + 1].kind == LayerKind::kRelu) {
    ++index;
  }
  return index;
}

FeatureMatrix extract(const Network& net, const std::vector<ImageRecord>& images,
                      std::string_view layer, const ExtractOptions& options) {
  const NetworkSpec& spec = net.spec();
  const std::size_t index = ResolveFeatureLayer(spec, layer);
  const std::string tap = spec.layers[index].name;
  FeatureMatrix f;
  f.dim = net.output_shapes()[index].sample_size();
  f.layer = std::string(layer);
  f.spec_hash = SpecFingerprint(spec);
  if (options.batch_size == 0) {
    Fail(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  }
  WeightBundle mean_only;
  mean_only.mean_image = net.mean_image();
  const bool labeled =
      !images.empty() && std::all_of(images.begin(), images.end(),
                                     [](const ImageRecord& r) { return r.label.has_value(); });
  for (std::size_t start = 0; start < images.size(); start += options.batch_size) {
    const std::size_t count = std::min(options.batch_size, images.size() - start);
    std::vector<Tensor> samples;
    samples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      samples.push_back(preprocess(images[start + i], mean_only, options.preprocess));
    }
    const Activations acts = net.forward(StackBatch(samples), {tap});
    const Tensor& out = acts.at(tap);
    for (std::size_t i = 0; i < count; ++i) {
      const ImageRecord& img = images[start + i];
      f.append(img.id, out.sample(i), labeled ? *img.label : std::string());
    }
  }
  return f;
}

FeatureMatrix feature_dropout(const FeatureMatrix& f, DropoutMode mode,
                              std::uint64_t seed) {
  FeatureMatrix out = f;
  const Tensor in(Shape4{1, 1, 1, f.values.size()}, f.values);
  DropoutResult<float> r = dropout_apply(in, DropoutState{0.5, mode, seed});
  out.values = r.output.vector();
  return out;
}

FeatureMatrix random_project(const FeatureMatrix& f, std::size_t target_dim,
                             std::uint64_t seed) {
  if (target_dim == 0 || target_dim > f.dim) {
    Fail(ErrorCode::kDimensionMismatch,
         "cannot project " + std::to_string(f.dim) + "-dim features to " +
             std::to_string(target_dim));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(
      0.0f, static_cast<float>(1.0 / std::sqrt(static_cast<double>(target_dim))));
  Matrix proj(f.dim, target_dim);
  for (float& v : proj.data()) v = normal(rng);
  FeatureMatrix out;
  out.dim = target_dim;
  out.ids = f.ids;
  out.labels = f.labels;
  out.layer = f.layer;
  out.spec_hash = f.spec_hash;
  out.values.assign(f.rows() * target_dim, 0.0f);
  if (f.rows() > 0) {
    GemmStrided(Transpose::kNo, Transpose::kNo, f.rows(), target_dim, f.dim, 1.0f,
                f.values.data(), f.dim, proj.data().data(), target_dim, 0.0f,
                out.values.data(), target_dim);
  }
  return out;
}

namespace {

constexpr char kFmxMagic[4] = {'F', 'M', 'X', '1'};

void PutU32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

void PutString(std::string& out, const std::string& s) {
  PutU32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Cursor {
 public:
  explicit Cursor(std::string_view b) : b_(b) {}
  std::string_view Take(std::size_t n) {
    if (b_.size() - pos_ < n) Fail(ErrorCode::kFormatError, "truncated .fmx file");
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t U32() {
    std::uint32_t v;
    std::memcpy(&v, Take(4).data(), 4);
    return v;
  }
  std::string String() { return std::string(Take(U32())); }
  bool done() const { return pos_ == b_.size(); }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string EncodeFeatures(const FeatureMatrix& f) {
  f.validate();
  std::string out(kFmxMagic, 4);
  PutU32(out, static_cast<std::uint32_t>(f.rows()));
  PutU32(out, static_cast<std::uint32_t>(f.dim));
  for (const std::string& id : f.ids) PutString(out, id);
  PutU32(out, f.has_labels() ? 1u : 0u);
  for (const std::string& label : f.labels) PutString(out, label);
  PutString(out, f.layer);
  PutString(out, f.spec_hash);
  out.append(reinterpret_cast<const char*>(f.values.data()),
             f.values.size() * sizeof(float));
  return out;
}

FeatureMatrix DecodeFeatures(std::string_view bytes) {
  Cursor c(bytes);
  if (std::memcmp(c.Take(4).data(), kFmxMagic, 4) != 0) {
    Fail(ErrorCode::kFormatError, "bad magic (expected FMX1)");
  }
  FeatureMatrix f;
  const std::uint32_t n = c.U32();
  f.dim = c.U32();
  f.ids.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) f.ids.push_back(c.String());
  const std::uint32_t has_labels = c.U32();
  if (has_labels > 1) Fail(ErrorCode::kFormatError, "bad label flag");
  if (has_labels) {
    for (std::uint32_t i = 0; i < n; ++i) f.labels.push_back(c.String());
  }
  f.layer = c.String();
  f.spec_hash = c.String();
  const std::size_t count = static_cast<std::size_t>(n) * f.dim;
  if (c.remaining() != count * sizeof(float)) {
    Fail(ErrorCode::kFormatError, "value block size does not match n x dim");
  }
  f.values.resize(count);
  std::memcpy(f.values.data(), c.Take(count * sizeof(float)).data(),
              count * sizeof(float));
  f.validate();
  return f;
}

void save_features(const FeatureMatrix& f, const std::string& path) {
  WriteFile(path, EncodeFeatures(f));
}

FeatureMatrix load_features(const std::string& path) {
  return DecodeFeatures(ReadFile(path));
}

namespace {

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string FeaturesToCsv(const FeatureMatrix& f) {
  std::string out = "id,label";
  for (std::size_t j = 0; j < f.dim; ++j) out += ",f" + std::to_string(j);
  out += "\n";
  char buf[32];
  for (std::size_t i = 0; i < f.rows(); ++i) {
    out += CsvField(f.ids[i]);
    out += ",";
    if (f.has_labels()) out += CsvField(f.labels[i]);
    for (float v : f.row(i)) {
      std::snprintf(buf, sizeof(buf), ",%.9g", static_cast<double>(v));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace convfeat
