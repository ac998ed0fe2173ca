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

// Command-line entry point: extract, eval, embed, profile, train, init.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.h"
#include "convfeat/error.h"
#include "convfeat/parallel.h"

namespace {

using convfeat::cli::EmbedConfig;
using convfeat::cli::EvalConfig;
using convfeat::cli::ExtractConfig;
using convfeat::cli::InitConfig;
using convfeat::cli::ProfileConfig;
using convfeat::cli::TrainConfig;

constexpr int kExitInput = 2;
constexpr int kExitEngine = 3;

void AddExtract(CLI::App& app, ExtractConfig& c) {
  CLI::App* sub = app.add_subcommand("extract", "Write tapped-layer features for an image list");
  sub->add_option("--spec", c.spec, "Network spec file")->required();
  sub->add_option("--weights", c.weights, "Weight bundle (.dcf)");
  sub->add_flag("--random-weights", c.random_weights,
                "Use seeded random weights instead of --weights");
  sub->add_option("--seed", c.seed, "Seed for --random-weights");
  sub->add_option("--layer", c.layer, "Layer to tap, e.g. fc6")->required();
  sub->add_option("--images", c.images, "Image list, one path<TAB>label per line")
      ->required();
  sub->add_option("--out", c.out, "Output feature file (.fmx)")->required();
  sub->add_option("--csv", c.csv, "Also write features as CSV");
  sub->add_option("--batch", c.batch, "Images per forward pass")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--channel-mean", c.channel_mean,
                  "Three per-channel means used when the bundle has no mean image")
      ->expected(3)
      ->delimiter(',');
}

void AddEval(CLI::App& app, EvalConfig& c) {
  CLI::App* sub = app.add_subcommand("eval", "Train and score linear classifiers on features");
  sub->add_option("--features", c.features, "Feature file (.fmx) with labels");
  sub->add_option("--classifier", c.classifier, "svm or logreg")
      ->capture_default_str()
      ->check(CLI::IsMember({"svm", "logreg"}));
  sub->add_flag("--dropout", c.dropout, "Apply feature dropout while training");
  sub->add_option("--train-per-class", c.train_per_class, "Training samples per class")
      ->capture_default_str();
  sub->add_option("--test-per-class", c.test_per_class,
                  "Test samples per class (0: all remaining)")
      ->capture_default_str();
  sub->add_option("--val-per-class", c.val_per_class,
                  "Validation samples per class for hyperparameter search "
                  "(0: 5 for 30, 8 for 50, else train/6)")
      ->capture_default_str();
  sub->add_option("--splits", c.splits, "Number of random splits")->capture_default_str();
  sub->add_option("--grid", c.grid, "Comma-separated regularization grid")
      ->delimiter(',');
  sub->add_option("--reg", c.reg, "Fixed regularization (skips the grid search)");
  sub->add_option("--max-epochs", c.max_epochs, "Classifier training epochs")
      ->capture_default_str();
  sub->add_option("--mode", c.mode, "Domain regime: S, T or ST")
      ->check(CLI::IsMember({"S", "T", "ST"}));
  sub->add_option("--source", c.source, "Source-domain feature file");
  sub->add_option("--target", c.target, "Target-domain feature file");
  sub->add_option("--source-per-class", c.source_per_class,
                  "Labeled source samples per class")
      ->capture_default_str();
  sub->add_option("--target-per-class", c.target_per_class,
                  "Labeled target samples per class")
      ->capture_default_str();
  sub->add_option("--sizes", c.sizes,
                  "Comma-separated training sizes per class for a learning curve")
      ->delimiter(',');
  sub->add_option("--seed", c.seed, "Random seed")->required();
  sub->add_option("--out", c.out, "Report JSON path (default: stdout)");
  sub->add_option("--confusion", c.confusion, "Confusion matrix CSV path");
}

void AddEmbed(CLI::App& app, EmbedConfig& c) {
  CLI::App* sub = app.add_subcommand("embed", "t-SNE scatter plot of features");
  sub->add_option("--features", c.features, "Feature file (.fmx)")->required();
  sub->add_option("--groups", c.groups, "label<TAB>group map for coloring");
  sub->add_option("--colors", c.colors, "group<TAB>color map overriding the palette");
  sub->add_option("--out", c.out, "Output SVG")->required();
  sub->add_option("--coords", c.coords, "Write 2-D coordinates as CSV");
  sub->add_option("--perplexity", c.perplexity, "t-SNE perplexity")->capture_default_str();
  sub->add_option("--iters", c.iters, "Gradient-descent iterations")->capture_default_str();
  sub->add_option("--project-dim", c.project_dim,
                  "Random-projection width applied first to wider features")
      ->capture_default_str();
  sub->add_option("--seed", c.seed, "Random seed")->required();
}

void AddProfile(CLI::App& app, ProfileConfig& c) {
  CLI::App* sub = app.add_subcommand("profile", "Per-layer forward timing");
  sub->add_option("--spec", c.spec, "Network spec file")->required();
  sub->add_option("--weights", c.weights, "Weight bundle (.dcf)");
  sub->add_flag("--random-weights", c.random_weights,
                "Use seeded random weights instead of --weights");
  sub->add_option("--seed", c.seed, "Seed for --random-weights and the input batch");
  sub->add_option("--batch", c.batch, "Images per forward pass")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--repeats", c.repeats, "Timed passes (>= 3)")->capture_default_str();
  sub->add_option("--warmup", c.warmup, "Discarded passes (>= 1)")->capture_default_str();
  sub->add_option("--table", c.table, "Text table path (default: stdout)");
  sub->add_option("--pie", c.pie, "Pie chart SVG path");
  sub->add_option("--csv", c.csv, "Raw per-layer CSV path");
}

void AddTrain(CLI::App& app, TrainConfig& c) {
  CLI::App* sub = app.add_subcommand("train", "SGD training on a labeled image directory");
  sub->add_option("--spec", c.spec, "Network spec file ending in softmax")->required();
  sub->add_option("--data", c.data,
                  "Directory with list.txt (path<TAB>integer label per line)")
      ->required();
  sub->add_option("--init", c.init, "Initial weights (default: seeded random)");
  sub->add_option("--out", c.out, "Output weight bundle (.dcf)")->required();
  sub->add_option("--loss-log", c.loss_log, "Per-epoch loss CSV path");
  sub->add_option("--lr", c.lr, "Learning rate")->capture_default_str();
  sub->add_option("--momentum", c.momentum, "Momentum")->capture_default_str();
  sub->add_option("--weight-decay", c.weight_decay, "L2 weight decay")
      ->capture_default_str();
  sub->add_option("--batch", c.batch, "Minibatch size")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--epochs", c.epochs, "Training epochs")->capture_default_str();
  sub->add_option("--seed", c.seed, "Random seed")->required();
}

void AddInit(CLI::App& app, InitConfig& c) {
  CLI::App* sub = app.add_subcommand("init", "Write seeded random weights for a spec");
  sub->add_option("--spec", c.spec, "Network spec file")->required();
  sub->add_option("--out", c.out, "Output weight bundle (.dcf)")->required();
  sub->add_option("--stddev", c.stddev, "Weight standard deviation")
      ->capture_default_str();
  sub->add_option("--seed", c.seed, "Random seed")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convfeat: convolutional feature extraction and evaluation"};
  app.set_version_flag("--version", "convfeat 0.1.0");
  app.require_subcommand(1);
  int threads = convfeat::NumThreads();
  app.add_option("--threads", threads,
                 "Worker threads (default: CONVFEAT_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  ExtractConfig extract;
  EvalConfig eval;
  EmbedConfig embed;
  ProfileConfig profile;
  TrainConfig train;
  InitConfig init;
  AddExtract(app, extract);
  AddEval(app, eval);
  AddEmbed(app, embed);
  AddProfile(app, profile);
  AddTrain(app, train);
  AddInit(app, init);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    convfeat::SetNumThreads(threads);
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "extract") convfeat::cli::RunExtract(extract);
    if (name == "eval") convfeat::cli::RunEval(eval);
    if (name == "embed") convfeat::cli::RunEmbed(embed);
    if (name == "profile") convfeat::cli::RunProfile(profile);
    if (name == "train") convfeat::cli::RunTrain(train);
    if (name == "init") convfeat::cli::RunInit(init);
  } catch (const convfeat::Error& e) {
    std::cerr << "error [" << convfeat::ErrorCodeName(e.code()) << "]: " << e.what()
              << "\n";
    return static_cast<int>(convfeat::CategoryOf(e.code()));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEngine;
  }
  return EXIT_SUCCESS;
}
