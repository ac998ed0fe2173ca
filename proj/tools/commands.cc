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

#include "commands.h"

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "convfeat/classifiers.h"
#include "convfeat/embed.h"
#include "convfeat/error.h"
#include "convfeat/features.h"
#include "convfeat/image.h"
#include "convfeat/io.h"
#include "convfeat/network.h"
#include "convfeat/network_spec.h"
#include "convfeat/profiler.h"
#include "convfeat/trainer.h"
#include "convfeat/weights.h"

namespace convfeat::cli {

namespace {

namespace fs = std::filesystem;

void RequireInput(const std::string& path, const char* flag) {
  if (path.empty()) return;
  if (!fs::exists(path)) {
    Fail(ErrorCode::kIoError, std::string(flag) + ": '" + path + "' does not exist");
  }
}

void RequireOutput(const std::string& path, const char* flag) {
  if (path.empty()) return;
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    Fail(ErrorCode::kIoError, std::string(flag) + ": directory '" + parent.string() +
                                  "' does not exist");
  }
}

void Log(const std::string& message) { std::cerr << message << "\n"; }

WeightBundle LoadOrInit(const NetworkSpec& spec, const std::string& weights,
                        bool random, std::optional<std::uint64_t> seed) {
  if (random) {
    if (!seed) Fail(ErrorCode::kInvalidArgument, "--random-weights requires --seed");
    return random_init(spec, *seed);
  }
  if (weights.empty()) {
    Fail(ErrorCode::kInvalidArgument, "one of --weights or --random-weights is required");
  }
  return load_weights(weights, spec);
}

std::string FormatAccuracy(const EvalReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s: mean per-class accuracy %.2f%% +- %.2f over %zu splits",
                r.protocol.c_str(), 100.0 * r.mean, 100.0 * r.stddev, r.splits.size());
  return buf;
}

void Emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    WriteFile(path, text);
  }
}

ClassifierKind ParseClassifier(const std::string& name) {
  if (name == "svm") return ClassifierKind::kSvm;
  if (name == "logreg") return ClassifierKind::kLogReg;
  Fail(ErrorCode::kInvalidArgument, "unknown classifier '" + name + "'");
}

Subsplit DefaultSubsplit(std::size_t train, std::size_t val) {
  if (val == 0) {
    if (train == kCaltechSubsplit.train + kCaltechSubsplit.validation) return kCaltechSubsplit;
    if (train == kSunSubsplit.train + kSunSubsplit.validation) return kSunSubsplit;
    val = std::max<std::size_t>(1, train / 6);
  }
  if (val >= train) {
    Fail(ErrorCode::kInvalidArgument,
         "--val-per-class must be smaller than --train-per-class");
  }
  return Subsplit{train - val, val};
}

}  // namespace

void RunExtract(const ExtractConfig& c) {
  RequireInput(c.spec, "--spec");
  RequireInput(c.weights, "--weights");
  RequireInput(c.images, "--images");
  RequireOutput(c.out, "--out");
  RequireOutput(c.csv, "--csv");
  const NetworkSpec spec = load_spec_file(c.spec);
  const Network net(spec, LoadOrInit(spec, c.weights, c.random_weights, c.seed));
  ResolveFeatureLayer(spec, c.layer);
  const std::vector<ImageListEntry> list = read_image_list(c.images);
  for (const ImageListEntry& e : list) RequireInput(e.path, "--images entry");
  const std::vector<ImageRecord> images = load_images(list);
  Log("extracting " + c.layer + " for " + std::to_string(images.size()) + " images");

  ExtractOptions options;
  options.batch_size = c.batch;
  if (spec.input_height != spec.input_width) {
    Fail(ErrorCode::kInvalidArgument, "extraction needs a square network input");
  }
  options.preprocess = PreprocessFor(spec.input_height, net.mean_image());
  if (!c.channel_mean.empty()) {
    if (c.channel_mean.size() != 3) {
      Fail(ErrorCode::kInvalidArgument, "--channel-mean takes three values");
    }
    std::copy(c.channel_mean.begin(), c.channel_mean.end(),
              options.preprocess.channel_mean.begin());
  }
  const FeatureMatrix f = extract(net, images, c.layer, options);
  save_features(f, c.out);
  if (!c.csv.empty()) WriteFile(c.csv, FeaturesToCsv(f));
  Log("wrote " + std::to_string(f.rows()) + " x " + std::to_string(f.dim) +
      " features to " + c.out);
}

void RunEval(const EvalConfig& c) {
  RequireInput(c.features, "--features");
  RequireInput(c.source, "--source");
  RequireInput(c.target, "--target");
  RequireOutput(c.out, "--out");
  RequireOutput(c.confusion, "--confusion");
  const ClassifierKind kind = ParseClassifier(c.classifier);
  TrainOptions train;
  train.dropout = c.dropout;
  train.max_epochs = c.max_epochs;
  train.seed = c.seed;
  const std::vector<double> grid = c.grid.empty() ? DefaultGrid() : c.grid;

  if (!c.mode.empty()) {
    if (c.source.empty() || c.target.empty()) {
      Fail(ErrorCode::kInvalidArgument, "--mode needs --source and --target");
    }
    DomainOptions options;
    options.classifier = kind;
    options.train = train;
    if (c.mode == "S") {
      options.mode = DomainMode::kSource;
    } else if (c.mode == "T") {
      options.mode = DomainMode::kTarget;
    } else if (c.mode == "ST") {
      options.mode = DomainMode::kSourceTarget;
    } else {
      Fail(ErrorCode::kInvalidArgument, "--mode must be S, T or ST");
    }
    options.source_per_class = c.source_per_class;
    options.target_per_class = c.target_per_class;
    options.n_splits = c.splits;
    options.reg = c.reg.value_or(options.reg);
    options.seed = c.seed;
    const EvalReport report =
        evaluate_domain(load_features(c.source), load_features(c.target), options);
    Emit(c.out, ReportToJson(report));
    if (!c.confusion.empty()) WriteFile(c.confusion, ConfusionToCsv(report));
    Log(FormatAccuracy(report));
    return;
  }

  if (c.features.empty()) {
    Fail(ErrorCode::kInvalidArgument, "--features is required without --mode");
  }
  const FeatureMatrix f = load_features(c.features);
  if (!c.sizes.empty()) {
    const std::vector<EvalReport> curve =
        learning_curve(f, c.sizes, c.splits, kind, c.reg.value_or(1e-3), train, c.seed);
    Emit(c.out, CurveToJson(curve));
    for (const EvalReport& r : curve) Log(FormatAccuracy(r));
    return;
  }
  ProtocolOptions options;
  options.classifier = kind;
  options.train = train;
  options.per_class_train = c.train_per_class;
  options.per_class_test = c.test_per_class;
  options.n_splits = c.splits;
  options.grid = c.reg ? std::vector<double>{*c.reg} : grid;
  if (options.grid.size() > 1) {
    options.subsplit = DefaultSubsplit(c.train_per_class, c.val_per_class);
  }
  options.seed = c.seed;
  options.name = "per-class-" + std::to_string(c.train_per_class);
  const EvalReport report = evaluate_protocol(f, options);
  Emit(c.out, ReportToJson(report));
  if (!c.confusion.empty()) WriteFile(c.confusion, ConfusionToCsv(report));
  Log(FormatAccuracy(report));
}

void RunEmbed(const EmbedConfig& c) {
  RequireInput(c.features, "--features");
  RequireInput(c.groups, "--groups");
  RequireInput(c.colors, "--colors");
  RequireOutput(c.out, "--out");
  RequireOutput(c.coords, "--coords");
  const FeatureMatrix f = load_features(c.features);
  const GroupMap groups = c.groups.empty() ? GroupMap{} : load_group_map(c.groups);
  const GroupMap colors = c.colors.empty() ? GroupMap{} : load_group_map(c.colors);
  TsneOptions options;
  options.perplexity = c.perplexity;
  options.iters = c.iters;
  options.seed = c.seed;
  Log("embedding " + std::to_string(f.rows()) + " points of dim " +
      std::to_string(f.dim));
  const Embedding e = embed_features(f, groups, options, c.project_dim);
  if (e.jittered_rows > 0) {
    Log("warning: jittered " + std::to_string(e.jittered_rows) + " duplicate rows");
  }
  if (!e.kl_trace.empty()) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "final KL divergence %.6f", e.kl_trace.back());
    Log(buf);
  }
  WriteFile(c.out, render_scatter(e, colors));
  if (!c.coords.empty()) WriteFile(c.coords, EmbeddingToCsv(e));
}

void RunProfile(const ProfileConfig& c) {
  RequireInput(c.spec, "--spec");
  RequireInput(c.weights, "--weights");
  RequireOutput(c.table, "--table");
  RequireOutput(c.pie, "--pie");
  RequireOutput(c.csv, "--csv");
  const NetworkSpec spec = load_spec_file(c.spec);
  const Network net(spec, LoadOrInit(spec, c.weights, c.random_weights, c.seed));
  ProfileOptions options;
  options.batch = c.batch;
  options.repeats = c.repeats;
  options.warmup = c.warmup;
  options.seed = c.seed.value_or(0);
  const TimingProfile p = profile_forward(net, options);
  Emit(c.table, RenderProfileTable(p));
  if (!c.pie.empty()) WriteFile(c.pie, RenderProfilePie(p));
  if (!c.csv.empty()) WriteFile(c.csv, ProfileToCsv(p));
}

void RunTrain(const TrainConfig& c) {
  RequireInput(c.spec, "--spec");
  RequireInput(c.init, "--init");
  RequireOutput(c.out, "--out");
  RequireOutput(c.loss_log, "--loss-log");
  const std::string list = (fs::path(c.data) / "list.txt").string();
  RequireInput(list, "--data");
  const NetworkSpec spec = load_spec_file(c.spec);
  WeightBundle init = c.init.empty() ? random_init(spec, c.seed) : load_weights(c.init, spec);
  const Dataset data = load_dataset(list, spec, init);
  Log("training on " + std::to_string(data.size()) + " images");
  SgdOptions options;
  options.lr = c.lr;
  options.momentum = c.momentum;
  options.weight_decay = c.weight_decay;
  options.batch = c.batch;
  options.epochs = c.epochs;
  options.seed = c.seed;
  std::string loss_csv = "epoch,loss\n";
  const TrainResult result =
      sgd_train(spec, std::move(init), data, options, [&](int epoch, double loss) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%d,%.9g\n", epoch, loss);
        loss_csv += buf;
        std::snprintf(buf, sizeof(buf), "epoch %d loss %.6f", epoch, loss);
        Log(buf);
      });
  save_weights(result.weights, c.out);
  if (!c.loss_log.empty()) WriteFile(c.loss_log, loss_csv);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "training accuracy %.4f",
                Accuracy(Network(spec, result.weights), data));
  Log(buf);
}

void RunInit(const InitConfig& c) {
  RequireInput(c.spec, "--spec");
  RequireOutput(c.out, "--out");
  const NetworkSpec spec = load_spec_file(c.spec);
  save_weights(random_init(spec, c.seed, c.stddev), c.out);
}

}  // namespace convfeat::cli
