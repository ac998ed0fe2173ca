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

#include "convfeat/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace convfeat {
namespace {

Tensor GatherBatch(const Tensor& images, std::span<const std::size_t> rows) {
  const Shape4 s = images.shape();
  Tensor out(Shape4{rows.size(), s.c, s.h, s.w});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::span<const float> src = images.sample(rows[i]);
    std::copy(src.begin(), src.end(), out.sample(i).begin());
  }
  return out;
}

}  // namespace

TrainResult sgd_train(const NetworkSpec& spec, WeightBundle init,
                      const Dataset& data, const SgdOptions& options,
                      const EpochLogger& logger) {
  if (spec.layers.empty() || spec.layers.back().kind != LayerKind::kSoftmax) {
    Fail(ErrorCode::kInvalidArgument, "training needs a spec ending in softmax");
  }
  if (data.images.shape().n != data.labels.size()) {
    Fail(ErrorCode::kDimensionMismatch, "image and label counts differ");
  }
  if (options.batch == 0) Fail(ErrorCode::kInvalidArgument, "batch must be >= 1");
  Network net(spec, std::move(init));
  const std::size_t classes = net.output_shapes().back().sample_size();
  for (int label : data.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      Fail(ErrorCode::kInvalidArgument,
           "label " + std::to_string(label) + " outside the " +
               std::to_string(classes) + "-way output");
    }
  }

  // Momentum buffers, one per parameterized layer.
  std::vector<std::vector<float>> vel_w(spec.layers.size());
  std::vector<std::vector<float>> vel_b(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    vel_w[i].assign(net.weight_data(i).size(), 0.0f);
    vel_b[i].assign(net.bias_data(i).size(), 0.0f);
  }

  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t softmax_index = spec.layers.size() - 1;
  const float lr = static_cast<float>(options.lr);
  const float mom = static_cast<float>(options.momentum);
  const float wd = static_cast<float>(options.weight_decay);

  TrainResult result;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    double penalty_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch) {
      const std::size_t count = std::min(options.batch, order.size() - start);
      std::span<const std::size_t> rows(order.data() + start, count);
      const Tensor batch = GatherBatch(data.images, rows);
      const TrainingPass pass = net.forward_train(batch, rng());
      double sq = 0.0;
      for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        for (float v : net.weight_data(l)) sq += static_cast<double>(v) * v;
      }
      penalty_sum += 0.5 * options.weight_decay * sq * static_cast<double>(count);

      // Softmax and cross-entropy combine to (p - onehot) / batch. The loss
      // itself comes from the logits so it does not round to zero once p[y]
      // reaches 1 in float.
      const Tensor& probs = pass.inputs.back();
      const Tensor& logits = pass.inputs[softmax_index];
      Tensor grad(probs.shape());
      for (std::size_t i = 0; i < count; ++i) {
        const int y = data.labels[rows[i]];
        std::span<const float> p = probs.sample(i);
        std::span<const float> z = logits.sample(i);
        std::span<float> g = grad.sample(i);
        const auto top = std::max_element(z.begin(), z.end());
        const double zmax = *top;
        double rest = 0.0;
        for (auto it = z.begin(); it != z.end(); ++it) {
          if (it != top) rest += std::exp(static_cast<double>(*it) - zmax);
        }
        loss_sum += zmax - static_cast<double>(z[y]) + std::log1p(rest);
        for (std::size_t c = 0; c < classes; ++c) {
          g[c] = (p[c] - (static_cast<int>(c) == y ? 1.0f : 0.0f)) /
                 static_cast<float>(count);
        }
      }
      if (!std::isfinite(loss_sum)) {
        Fail(ErrorCode::kDivergence,
             "loss became non-finite in epoch " + std::to_string(epoch + 1));
      }
      // Gradient w.r.t. the softmax input is the output gradient of the
      // layer below it.
      if (softmax_index == 0) continue;
      const std::vector<LayerGradients> grads =
          net.backward(pass, softmax_index - 1, std::move(grad));
      for (const LayerGradients& g : grads) {
        std::span<float> w = net.weight_data(g.layer);
        std::span<float> b = net.bias_data(g.layer);
        std::vector<float>& vw = vel_w[g.layer];
        std::vector<float>& vb = vel_b[g.layer];
        for (std::size_t k = 0; k < w.size(); ++k) {
          vw[k] = mom * vw[k] - lr * (g.weights[k] + wd * w[k]);
          w[k] += vw[k];
        }
        for (std::size_t k = 0; k < b.size(); ++k) {
          vb[k] = mom * vb[k] - lr * g.bias[k];
          b[k] += vb[k];
        }
      }
    }
    const double epoch_loss = loss_sum / static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss)) {
      Fail(ErrorCode::kDivergence,
           "loss became non-finite in epoch " + std::to_string(epoch + 1));
    }
    result.epoch_loss.push_back(epoch_loss);
    result.epoch_objective.push_back(epoch_loss +
                                     penalty_sum / static_cast<double>(data.size()));
    if (logger) logger(epoch + 1, epoch_loss);
  }
  result.weights = net.weights();
  return result;
}

double Accuracy(const Network& net, const Dataset& data, std::size_t batch) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    const std::size_t count = std::min(batch, data.size() - start);
    rows.resize(count);
    std::iota(rows.begin(), rows.end(), start);
    const Activations out = net.forward(GatherBatch(data.images, rows), {});
    const Tensor& scores = out.at(net.terminal_name());
    for (std::size_t i = 0; i < count; ++i) {
      std::span<const float> s = scores.sample(i);
      const auto best = std::max_element(s.begin(), s.end()) - s.begin();
      if (best == data.labels[start + i]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

Dataset load_dataset(const std::string& list_path, const NetworkSpec& spec,
                     const WeightBundle& bundle) {
  const std::vector<ImageListEntry> list = read_image_list(list_path);
  if (spec.input_height != spec.input_width) {
    Fail(ErrorCode::kInvalidArgument, "training input must be square");
  }
  const PreprocessOptions opts = PreprocessFor(spec.input_height, bundle.mean_image);
  Dataset data;
  std::vector<Tensor> samples;
  for (const ImageListEntry& e : list) {
    if (!e.label) {
      Fail(ErrorCode::kInvalidArgument, "training image '" + e.path + "' has no label");
    }
    int label = 0;
    try {
      std::size_t used = 0;
      label = std::stoi(*e.label, &used);
      if (used != e.label->size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      Fail(ErrorCode::kInvalidArgument,
           "training label '" + *e.label + "' is not an integer class index");
    }
    samples.push_back(preprocess(read_ppm(e.path), bundle, opts));
    data.labels.push_back(label);
  }
  data.images = StackBatch(samples);
  return data;
}

}  // namespace convfeat
