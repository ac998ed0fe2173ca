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

#include "convfeat/weights.h"

#include <bit>
#include <cstring>
#include <random>
#include <set>

#include "convfeat/io.h"

namespace convfeat {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

const LayerWeights* WeightBundle::find(std::string_view name) const {
  for (const LayerWeights& l : layers) {
    if (l.name == name) return &l;
  }
  return nullptr;
}

LayerWeights* WeightBundle::find(std::string_view name) {
  for (LayerWeights& l : layers) {
    if (l.name == name) return &l;
  }
  return nullptr;
}

void ValidateBundle(const WeightBundle& bundle, const NetworkSpec& spec) {
  std::set<std::string> expected;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    if (!layer.has_parameters()) continue;
    expected.insert(layer.name);
    const LayerWeights* w = bundle.find(layer.name);
    if (w == nullptr) {
      Fail(ErrorCode::kMissingLayer,
           "weight bundle has no entry for layer '" + layer.name + "'");
    }
    const ParamShape want = ParameterShape(spec, i);
    if (!(w->weights.shape() == want.weights)) {
      Fail(ErrorCode::kShapeMismatch,
           "layer '" + layer.name + "' weights have shape " +
               ToString(w->weights.shape()) + ", spec needs " +
               ToString(want.weights));
    }
    if (w->bias.size() != want.bias) {
      Fail(ErrorCode::kShapeMismatch,
           "layer '" + layer.name + "' bias has length " +
               std::to_string(w->bias.size()) + ", spec needs " +
               std::to_string(want.bias));
    }
  }
  for (const LayerWeights& l : bundle.layers) {
    if (!expected.count(l.name)) {
      Fail(ErrorCode::kShapeMismatch,
           "weight bundle entry '" + l.name +
               "' matches no parameterized layer in the spec");
    }
  }
  if (bundle.mean_image) {
    const Shape4 s = bundle.mean_image->shape();
    if (s.n != 1 || s.c != spec.input_channels) {
      Fail(ErrorCode::kShapeMismatch,
           "mean image shape " + ToString(s) + " does not match input channels");
    }
  }
}

namespace {

constexpr char kMagic[4] = {'D', 'C', 'F', '1'};
constexpr char kMeanTag[4] = {'M', 'E', 'A', 'N'};

void PutU32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

void PutFloats(std::string& out, std::span<const float> v) {
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
}

void PutShape(std::string& out, const Shape4& s) {
  for (std::size_t d : {s.n, s.c, s.h, s.w}) {
    PutU32(out, static_cast<std::uint32_t>(d));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::string_view Take(std::size_t n, const char* what) {
    if (remaining() < n) {
      Fail(ErrorCode::kFormatError, std::string("truncated file while reading ") +
                                        what);
    }
    std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t U32(const char* what) {
    std::uint32_t v;
    std::memcpy(&v, Take(4, what).data(), 4);
    return v;
  }
  Shape4 Shape(const char* what) {
    Shape4 s;
    s.n = U32(what);
    s.c = U32(what);
    s.h = U32(what);
    s.w = U32(what);
    return s;
  }
  std::vector<float> Floats(std::size_t n, const char* what) {
    if (n > remaining() / sizeof(float)) {
      Fail(ErrorCode::kFormatError,
           std::string("truncated file while reading ") + what);
    }
    std::vector<float> v(n);
    std::memcpy(v.data(), Take(n * sizeof(float), what).data(),
                n * sizeof(float));
    return v;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string EncodeWeights(const WeightBundle& bundle) {
  std::string out(kMagic, 4);
  PutU32(out, static_cast<std::uint32_t>(bundle.layers.size()));
  for (const LayerWeights& l : bundle.layers) {
    PutU32(out, static_cast<std::uint32_t>(l.name.size()));
    out += l.name;
    PutShape(out, l.weights.shape());
    PutFloats(out, l.weights.data());
    PutU32(out, static_cast<std::uint32_t>(l.bias.size()));
    PutFloats(out, l.bias);
  }
  if (bundle.mean_image) {
    out.append(kMeanTag, 4);
    PutShape(out, bundle.mean_image->shape());
    PutFloats(out, bundle.mean_image->data());
  }
  return out;
}

WeightBundle DecodeWeights(std::string_view bytes) {
  Reader r(bytes);
  if (std::memcmp(r.Take(4, "magic").data(), kMagic, 4) != 0) {
    Fail(ErrorCode::kFormatError, "bad magic or version (expected DCF1)");
  }
  const std::uint32_t count = r.U32("layer count");
  WeightBundle bundle;
  for (std::uint32_t i = 0; i < count; ++i) {
    LayerWeights l;
    const std::uint32_t name_len = r.U32("layer name length");
    l.name = std::string(r.Take(name_len, "layer name"));
    const Shape4 shape = r.Shape("weight shape");
    l.weights = Tensor(shape, r.Floats(shape.size(), "weights"));
    const std::uint32_t bias_len = r.U32("bias length");
    l.bias = r.Floats(bias_len, "bias");
    bundle.layers.push_back(std::move(l));
  }
  if (!r.done()) {
    if (std::memcmp(r.Take(4, "mean tag").data(), kMeanTag, 4) != 0) {
      Fail(ErrorCode::kFormatError, "unexpected trailing block (expected MEAN)");
    }
    const Shape4 shape = r.Shape("mean shape");
    bundle.mean_image = Tensor(shape, r.Floats(shape.size(), "mean image"));
  }
  if (!r.done()) {
    Fail(ErrorCode::kFormatError, "unexpected bytes after the last block");
  }
  return bundle;
}

void save_weights(const WeightBundle& bundle, const std::string& path) {
  WriteFile(path, EncodeWeights(bundle));
}

WeightBundle load_weights(const std::string& path) {
  return DecodeWeights(ReadFile(path));
}

WeightBundle load_weights(const std::string& path, const NetworkSpec& spec) {
  WeightBundle bundle = load_weights(path);
  ValidateBundle(bundle, spec);
  return bundle;
}

WeightBundle random_init(const NetworkSpec& spec, std::uint64_t seed,
                         float stddev) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, stddev);
  WeightBundle bundle;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (!spec.layers[i].has_parameters()) continue;
    const ParamShape shape = ParameterShape(spec, i);
    LayerWeights l{spec.layers[i].name, Tensor(shape.weights),
                   std::vector<float>(shape.bias, 0.0f)};
    for (float& v : l.weights.data()) v = normal(rng);
    bundle.layers.push_back(std::move(l));
  }
  return bundle;
}

}  // namespace convfeat
