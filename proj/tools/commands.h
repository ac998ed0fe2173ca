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

#ifndef CONVFEAT_TOOLS_COMMANDS_H_
#define CONVFEAT_TOOLS_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace convfeat::cli {

struct ExtractConfig {
  std::string spec;
  std::string weights;
  bool random_weights = false;
  std::optional<std::uint64_t> seed;
  std::string layer;
  std::string images;
  std::string out;
  std::string csv;
  std::size_t batch = 32;
  std::vector<float> channel_mean;
};

struct EvalConfig {
  std::string features;
  std::string source;
  std::string target;
  std::string mode;  // empty: single-domain protocol
  std::string classifier = "svm";
  bool dropout = false;
  std::size_t train_per_class = 30;
  std::size_t test_per_class = 0;
  std::size_t val_per_class = 0;  // 0: derived from train_per_class
  std::size_t splits = 5;
  std::vector<double> grid;
  std::optional<double> reg;
  std::size_t source_per_class = 20;
  std::size_t target_per_class = 3;
  std::vector<std::size_t> sizes;
  int max_epochs = 100;
  std::uint64_t seed = 0;
  std::string out;
  std::string confusion;
};

struct EmbedConfig {
  std::string features;
  std::string groups;
  std::string colors;
  std::string out;
  std::string coords;
  double perplexity = 30.0;
  int iters = 1000;
  std::size_t project_dim = 512;
  std::uint64_t seed = 0;
};

struct ProfileConfig {
  std::string spec;
  std::string weights;
  bool random_weights = false;
  std::optional<std::uint64_t> seed;
  std::size_t batch = 1;
  std::size_t repeats = 10;
  std::size_t warmup = 1;
  std::string table;
  std::string pie;
  std::string csv;
};

struct TrainConfig {
  std::string spec;
  std::string data;
  std::string init;
  std::string out;
  std::string loss_log;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t batch = 32;
  int epochs = 10;
  std::uint64_t seed = 0;
};

struct InitConfig {
  std::string spec;
  std::string out;
  double stddev = 0.01;
  std::uint64_t seed = 0;
};

void RunExtract(const ExtractConfig& c);
void RunEval(const EvalConfig& c);
void RunEmbed(const EmbedConfig& c);
void RunProfile(const ProfileConfig& c);
void RunTrain(const TrainConfig& c);
void RunInit(const InitConfig& c);

}  // namespace convfeat::cli

#endif  // CONVFEAT_TOOLS_COMMANDS_H_
