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

#include "convfeat/network.h"

#include <algorithm>
#include <cstring>

namespace convfeat {

Network::Network(NetworkSpec spec, WeightBundle bundle)
    : spec_(std::move(spec)) {
  ValidateSpec(spec_);
  ValidateBundle(bundle, spec_);
  shapes_ = LayerOutputShapes(spec_);
  mean_image_ = std::move(bundle.mean_image);
  layers_.reserve(spec_.layers.size());
  for (const LayerSpec& ls : spec_.layers) {
    BoundLayer layer{ls, {}, {}, {}};
    if (ls.kind == LayerKind::kConv) {
      LayerWeights* w = bundle.find(ls.name);
      layer.conv.stride = ls.stride;
      layer.conv.pad = ls.pad;
      layer.conv.weights = std::move(w->weights);
      layer.conv.bias = std::move(w->bias);
    } else if (ls.kind == LayerKind::kFc) {
      LayerWeights* w = bundle.find(ls.name);
      const Shape4 s = w->weights.shape();
      std::vector<float> data(w->weights.data().begin(), w->weights.data().end());
      w->weights = Tensor();
      layer.fc.weights = Matrix(s.n, s.c, std::move(data));
      layer.fc.bias = std::move(w->bias);
    } else if (ls.kind == LayerKind::kPool) {
      layer.pool = PoolParams{ls.window, ls.stride};
    }
    layers_.push_back(std::move(layer));
  }
}

const std::string& Network::terminal_name() const {
  return spec_.layers.empty() ? spec_.input_name : spec_.layers.back().name;
}

void Network::CheckBatch(const Tensor& batch) const {
  const Shape4 s = batch.shape();
  if (s.c != spec_.input_channels || s.h != spec_.input_height ||
      s.w != spec_.input_width) {
    Fail(ErrorCode::kShapeMismatch,
         "batch shape " + ToString(s) + " does not match network input " +
             ToString(spec_.input_shape(s.n)));
  }
}

Activations Network::forward(const Tensor& batch,
                             const std::set<std::string>& taps,
                             const ForwardOptions& options) const {
  for (const std::string& tap : taps) {
    if (!spec_.find(tap)) {
      Fail(ErrorCode::kUnknownTap, "no layer named '" + tap + "'");
    }
  }
  CheckBatch(batch);
  Activations out;
  Tensor cur = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const BoundLayer& layer = layers_[i];
    const auto start = std::chrono::steady_clock::now();
    switch (layer.spec.kind) {
      case LayerKind::kConv:
        cur = conv_forward(cur, layer.conv);
        break;
      case LayerKind::kPool:
        cur = maxpool_forward(cur, layer.pool).output;
        break;
      case LayerKind::kRelu:
        for (float& v : cur.data()) v = std::max(v, 0.0f);
        break;
      case LayerKind::kLrn:
        cur = lrn_forward(cur, layer.spec.lrn);
        break;
      case LayerKind::kFc:
        cur = fc_forward(cur, layer.fc);
        break;
      case LayerKind::kDropout:
        for (float& v : cur.data()) v *= 0.5f;
        break;
      case LayerKind::kSoftmax:
        cur = softmax_forward(cur);
        break;
    }
    if (options.observer) {
      options.observer(i, std::chrono::steady_clock::now() - start);
    }
    if (options.checked) CheckFinite<float>(cur.data(), "layer '" + layer.spec.name + "'");
    if (taps.count(layer.spec.name) && i + 1 != layers_.size()) {
      out[layer.spec.name] = cur;
    }
  }
  out[terminal_name()] = std::move(cur);
  return out;
}

TrainingPass Network::forward_train(const Tensor& batch,
                                    std::uint64_t seed) const {
  CheckBatch(batch);
  TrainingPass pass;
  pass.inputs.reserve(layers_.size() + 1);
  pass.pool_argmax.resize(layers_.size());
  pass.dropout_masks.resize(layers_.size());
  pass.dropout_states.resize(layers_.size());
  pass.inputs.push_back(batch);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const BoundLayer& layer = layers_[i];
    const Tensor& in = pass.inputs.back();
    Tensor next;
    switch (layer.spec.kind) {
      case LayerKind::kConv:
        next = conv_forward(in, layer.conv);
        break;
      case LayerKind::kPool: {
        PoolResult<float> r = maxpool_forward(in, layer.pool);
        next = std::move(r.output);
        pass.pool_argmax[i] = std::move(r.argmax);
        break;
      }
      case LayerKind::kRelu:
        next = relu_forward(in);
        break;
      case LayerKind::kLrn:
        next = lrn_forward(in, layer.spec.lrn);
        break;
      case LayerKind::kFc:
        next = fc_forward(in, layer.fc);
        break;
      case LayerKind::kDropout: {
        DropoutState state{0.5, DropoutMode::kTrain,
                           seed ^ (0x9e3779b97f4a7c15ull * (i + 1))};
        DropoutResult<float> r = dropout_apply(in, state);
        next = std::move(r.output);
        pass.dropout_masks[i] = std::move(r.mask);
        pass.dropout_states[i] = state;
        break;
      }
      case LayerKind::kSoftmax:
        next = softmax_forward(in);
        break;
    }
    pass.inputs.push_back(std::move(next));
  }
  return pass;
}

std::vector<LayerGradients> Network::backward(const TrainingPass& pass,
                                              std::size_t from_layer,
                                              Tensor grad) const {
  if (pass.inputs.size() != layers_.size() + 1 || from_layer >= layers_.size()) {
    Fail(ErrorCode::kStateMissing, "backward needs a matching forward_train pass");
  }
  std::vector<LayerGradients> grads;
  for (std::size_t i = from_layer + 1; i-- > 0;) {
    const BoundLayer& layer = layers_[i];
    const Tensor& in = pass.inputs[i];
    switch (layer.spec.kind) {
      case LayerKind::kConv: {
        ConvGrads<float> g = conv_backward(in, layer.conv, grad);
        grads.push_back({i, std::move(g.weights), std::move(g.bias)});
        grad = std::move(g.input);
        break;
      }
      case LayerKind::kPool:
        grad = maxpool_backward<float>(in.shape(), pass.pool_argmax[i], grad);
        break;
      case LayerKind::kRelu:
        grad = relu_backward(in, grad);
        break;
      case LayerKind::kLrn:
        grad = lrn_backward(in, layer.spec.lrn, grad);
        break;
      case LayerKind::kFc: {
        FcGrads<float> g = fc_backward(in, layer.fc, grad);
        const std::size_t m = g.weights.rows(), d = g.weights.cols();
        std::vector<float> w(g.weights.data().begin(), g.weights.data().end());
        grads.push_back({i, Tensor(Shape4{m, d, 1, 1}, std::move(w)),
                         std::move(g.bias)});
        grad = std::move(g.input);
        grad.reshape(in.shape());
        break;
      }
      case LayerKind::kDropout:
        grad = dropout_backward<float>(pass.dropout_states[i],
                                       pass.dropout_masks[i], grad);
        break;
      case LayerKind::kSoftmax:
        grad = softmax_backward(pass.inputs[i + 1], grad);
        break;
    }
  }
  return grads;
}

WeightBundle Network::weights() const {
  WeightBundle bundle;
  for (const BoundLayer& layer : layers_) {
    if (layer.spec.kind == LayerKind::kConv) {
      bundle.layers.push_back({layer.spec.name, layer.conv.weights, layer.conv.bias});
    } else if (layer.spec.kind == LayerKind::kFc) {
      const std::size_t m = layer.fc.weights.rows(), d = layer.fc.weights.cols();
      std::vector<float> w(layer.fc.weights.data().begin(),
                           layer.fc.weights.data().end());
      bundle.layers.push_back(
          {layer.spec.name, Tensor(Shape4{m, d, 1, 1}, std::move(w)), layer.fc.bias});
    }
  }
  bundle.mean_image = mean_image_;
  return bundle;
}

std::span<float> Network::weight_data(std::size_t layer) {
  BoundLayer& l = layers_.at(layer);
  if (l.spec.kind == LayerKind::kConv) return l.conv.weights.data();
  if (l.spec.kind == LayerKind::kFc) return l.fc.weights.data();
  return {};
}

std::span<float> Network::bias_data(std::size_t layer) {
  BoundLayer& l = layers_.at(layer);
  if (l.spec.kind == LayerKind::kConv) return l.conv.bias;
  if (l.spec.kind == LayerKind::kFc) return l.fc.bias;
  return {};
}

Activations forward(const NetworkSpec& spec, const WeightBundle& bundle,
                    const Tensor& batch, const std::set<std::string>& taps) {
  return Network(spec, bundle).forward(batch, taps);
}

Tensor StackBatch(const std::vector<Tensor>& samples) {
  if (samples.empty()) return Tensor();
  const Shape4 s = samples.front().shape();
  Tensor out(Shape4{samples.size(), s.c, s.h, s.w});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Shape4 si = samples[i].shape();
    if (si.n != 1 || si.c != s.c || si.h != s.h || si.w != s.w) {
      Fail(ErrorCode::kShapeMismatch, "cannot stack sample of shape " + ToString(si));
    }
    std::copy(samples[i].data().begin(), samples[i].data().end(),
              out.sample(i).begin());
  }
  return out;
}

}  // namespace convfeat
