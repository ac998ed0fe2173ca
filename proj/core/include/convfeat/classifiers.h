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

#ifndef CONVFEAT_CLASSIFIERS_H_
#define CONVFEAT_CLASSIFIERS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convfeat/features.h"

namespace convfeat {

// Sorted distinct label strings and each row's index into them.
struct LabelEncoding {
  std::vector<std::string> names;
  std::vector<int> codes;
};
LabelEncoding EncodeLabels(const std::vector<std::string>& labels);

FeatureMatrix SelectRows(const FeatureMatrix& f, std::span<const std::size_t> rows);
std::vector<int> SelectLabels(std::span<const int> y,
                              std::span<const std::size_t> rows);

enum class ClassifierKind { kLogReg, kSvm };
std::string_view ClassifierName(ClassifierKind kind);

struct LinearModel {
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<double> weights;  // classes x dim
  std::vector<double> bias;     // classes
  // Applied to features before scoring; 0.5 for models trained with
  // feature dropout.
  double input_scale = 1.0;
  std::vector<std::string> class_names;
  ClassifierKind kind = ClassifierKind::kLogReg;
  double reg = 0.0;
  std::uint64_t seed = 0;
  // Full-data objective after each epoch (dropout disabled).
  std::vector<double> objective_trace;
};

struct TrainOptions {
  bool dropout = false;
  std::uint64_t seed = 0;
  int max_epochs = 100;
  // Initial step size; 0 picks 1/L from the mean squared feature norm.
  double lr = 0.0;
  // 0 means full-batch.
  std::size_t batch_size = 0;
};

// Multinomial logistic regression: mean softmax cross-entropy plus
// (lambda/2)||W||^2, bias unregularized. The step size halves after every
// quarter of max_epochs.
LinearModel train_logreg(const FeatureMatrix& x, std::span<const int> y,
                         std::size_t classes, double lambda,
                         const TrainOptions& options = {});

// One-vs-rest linear SVM: per class, mean hinge loss on +/-1 targets plus
// (reg/2)||w_k||^2, by subgradient descent with the same schedule.
LinearModel train_svm(const FeatureMatrix& x, std::span<const int> y,
                      std::size_t classes, double reg,
                      const TrainOptions& options = {});

struct Prediction {
  std::vector<int> labels;
  std::vector<double> scores;  // rows x classes
};

// argmax of scale*x.W^T + b; ties go to the lowest class index.
Prediction predict(const LinearModel& model, const FeatureMatrix& x);

// Mean over classes of within-class accuracy. When `classes` is non-zero,
// every class in [0, classes) must occur in truth.
double mean_per_class_accuracy(std::span<const int> predicted,
                               std::span<const int> truth,
                               std::size_t classes = 0);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct SplitSet {
  std::vector<Split> splits;
  std::size_t per_class_train = 0;
  std::size_t per_class_test = 0;
  std::uint64_t seed = 0;
};

// n_splits seeded draws of per_class_train rows from each class; the
// remainder of each class (or the next per_class_test rows, when non-zero)
// is the test set. `class_names` only improves error messages.
SplitSet make_splits(std::span<const int> labels, std::size_t per_class_train,
                     std::size_t n_splits, std::uint64_t seed,
                     std::size_t per_class_test = 0,
                     const std::vector<std::string>& class_names = {});

using Trainer = std::function<LinearModel(
    const FeatureMatrix&, std::span<const int>, std::size_t, double)>;

Trainer MakeTrainer(ClassifierKind kind, const TrainOptions& options);

struct Subsplit {
  std::size_t train = 0;
  std::size_t validation = 0;
};

// Caltech-101 (30 train/class) and SUN-397 (50 train/class) subsplits.
inline constexpr Subsplit kCaltechSubsplit{25, 5};
inline constexpr Subsplit kSunSubsplit{42, 8};

const std::vector<double>& DefaultGrid();

struct CrossvalResult {
  double best = 0.0;
  std::vector<double> validation_accuracy;  // parallel to the grid
};

// Chooses the grid value with the best validation mean per-class accuracy on
// one seeded subsplit of the given (training-only) rows. Ties go to the
// largest value, i.e. the strongest regularization.
CrossvalResult crossval_select(const FeatureMatrix& x, std::span<const int> y,
                               std::size_t classes,
                               const std::vector<double>& grid,
                               Subsplit subsplit, const Trainer& trainer,
                               std::uint64_t seed);

enum class DomainMode { kSource, kTarget, kSourceTarget };
std::string_view DomainModeName(DomainMode mode);

// S: source rows, T: target rows, ST: source rows then target rows.
FeatureMatrix domain_compose(const FeatureMatrix& source,
                             const FeatureMatrix& target, DomainMode mode);

struct SplitResult {
  double accuracy = 0.0;
  double chosen_reg = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]

  bool operator==(const SplitResult&) const = default;
};

struct EvalReport {
  std::string protocol;
  std::string classifier;
  bool dropout = false;
  std::size_t per_class_train = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> class_names;
  std::vector<SplitResult> splits;
  double mean = 0.0;
  double stddev = 0.0;

  // Recomputes mean and sample standard deviation from the splits.
  void Summarize();
  bool operator==(const EvalReport&) const = default;
};

struct ProtocolOptions {
  ClassifierKind classifier = ClassifierKind::kSvm;
  TrainOptions train;
  std::size_t per_class_train = 30;
  std::size_t per_class_test = 0;
  std::size_t n_splits = 5;
  Subsplit subsplit = kCaltechSubsplit;
  std::vector<double> grid = DefaultGrid();
  std::uint64_t seed = 0;
  std::string name = "splits";
};

// make_splits -> crossval_select on each split's training rows -> train on
// all training rows -> mean per-class accuracy on the test rows.
EvalReport evaluate_protocol(const FeatureMatrix& f, const ProtocolOptions& options);

struct DomainOptions {
  ClassifierKind classifier = ClassifierKind::kSvm;
  TrainOptions train;
  DomainMode mode = DomainMode::kSourceTarget;
  std::size_t source_per_class = 20;
  std::size_t target_per_class = 3;
  std::size_t n_splits = 5;
  double reg = 1e-3;
  std::uint64_t seed = 0;
};

// Trains on sampled source and/or labeled target rows, tests on the
// remaining target rows.
EvalReport evaluate_domain(const FeatureMatrix& source, const FeatureMatrix& target,
                           const DomainOptions& options);

// One report per training-set size, all drawn with the same seed and a
// fixed regularizer.
std::vector<EvalReport> learning_curve(const FeatureMatrix& f,
                                       const std::vector<std::size_t>& sizes,
                                       std::size_t n_splits,
                                       ClassifierKind classifier, double reg,
                                       const TrainOptions& train,
                                       std::uint64_t seed);

// Fixed key order, two-space indentation, trailing newline.
std::string ReportToJson(const EvalReport& report);
EvalReport ReportFromJson(std::string_view text);
std::string CurveToJson(const std::vector<EvalReport>& reports);
// Rows `split,truth,<predicted classes...>`.
std::string ConfusionToCsv(const EvalReport& report);

}  // namespace convfeat

#endif  // CONVFEAT_CLASSIFIERS_H_
