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

#ifndef CONVFEAT_TRAINER_H_
#define CONVFEAT_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "convfeat/image.h"
#include "convfeat/network.h"

namespace convfeat {

// Preprocessed images with integer class labels.
struct Dataset {
  Tensor images;  // (N, C, H, W)
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

struct SgdOptions {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t batch = 32;
  int epochs = 10;
  std::uint64_t seed = 0;
};

struct TrainResult {
  WeightBundle weights;
  // Mean cross-entropy over each epoch's minibatches.
  std::vector<double> epoch_loss;
  // epoch_loss plus the weight-decay penalty (weight_decay / 2) * ||W||^2,
  // i.e. the objective the updates descend. Biases are not decayed.
  std::vector<double> epoch_objective;
};

using EpochLogger = std::function<void(int epoch, double loss)>;

// Minibatch SGD with momentum on softmax cross-entropy. Single-threaded and
// bit-reproducible for a fixed seed. The spec must end in softmax and every
// label must index its output.
TrainResult sgd_train(const NetworkSpec& spec, WeightBundle init,
                      const Dataset& data, const SgdOptions& options,
                      const EpochLogger& logger = {});

// Fraction of samples whose argmax output equals the label.
double Accuracy(const Network& net, const Dataset& data,
                std::size_t batch = 64);

// Reads a `path<TAB>label` list (integer labels) and preprocesses each image
// for the spec's input size.
Dataset load_dataset(const std::string& list_path, const NetworkSpec& spec,
                     const WeightBundle& bundle);

}  // namespace convfeat

#endif  // CONVFEAT_TRAINER_H_
