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

#include "convfeat/classifiers.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace convfeat {

LabelEncoding EncodeLabels(const std::vector<std::string>& labels) {
  LabelEncoding enc;
  std::set<std::string> distinct(labels.begin(), labels.end());
  enc.names.assign(distinct.begin(), distinct.end());
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < enc.names.size(); ++i) {
    index[enc.names[i]] = static_cast<int>(i);
  }
  enc.codes.reserve(labels.size());
  for (const std::string& l : labels) enc.codes.push_back(index.at(l));
  return enc;
}

FeatureMatrix SelectRows(const FeatureMatrix& f, std::span<const std::size_t> rows) {
  FeatureMatrix out;
  out.dim = f.dim;
  out.layer = f.layer;
  out.spec_hash = f.spec_hash;
  out.values.reserve(rows.size() * f.dim);
  for (std::size_t r : rows) {
    if (r >= f.rows()) Fail(ErrorCode::kInvalidArgument, "row index out of range");
    out.ids.push_back(f.ids[r]);
    if (f.has_labels()) out.labels.push_back(f.labels[r]);
    std::span<const float> src = f.row(r);
    out.values.insert(out.values.end(), src.begin(), src.end());
  }
  return out;
}

std::vector<int> SelectLabels(std::span<const int> y,
                              std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(y[r]);
  return out;
}

std::string_view ClassifierName(ClassifierKind kind) {
  return kind == ClassifierKind::kSvm ? "svm" : "logreg";
}

namespace {

void CheckTrainingInput(const FeatureMatrix& x, std::span<const int> y,
                        std::size_t classes) {
  if (x.rows() != y.size()) {
    Fail(ErrorCode::kDimensionMismatch,
         std::to_string(x.rows()) + " rows but " + std::to_string(y.size()) +
             " labels");
  }
  if (x.dim == 0) Fail(ErrorCode::kDimensionMismatch, "features have zero dim");
  std::set<int> present;
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      Fail(ErrorCode::kInvalidArgument,
           "label " + std::to_string(label) + " outside [0, " +
               std::to_string(classes) + ")");
    }
    present.insert(label);
  }
  if (classes < 2 || present.size() < 2) {
    Fail(ErrorCode::kSingleClass, "training data must contain at least two classes");
  }
}

// scores (n x classes) = scale * x * W^T + b
void Scores(const double* x, std::size_t n, std::size_t d, const LinearModel& m,
            double scale, double* scores) {
  GemmStrided(Transpose::kNo, Transpose::kYes, n, m.classes, d, scale, x, d,
              m.weights.data(), d, 0.0, scores, m.classes);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m.classes; ++k) scores[i * m.classes + k] += m.bias[k];
  }
}

// Mean data loss over the rows; fills grad_scores with d(mean loss)/d(score).
double DataLoss(ClassifierKind kind, std::span<const double> scores,
                std::span<const int> y, std::size_t classes,
                std::vector<double>* grad_scores) {
  const std::size_t n = y.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  if (grad_scores) grad_scores->assign(n * classes, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* s = scores.data() + i * classes;
    double* g = grad_scores ? grad_scores->data() + i * classes : nullptr;
    if (kind == ClassifierKind::kLogReg) {
      const double max = *std::max_element(s, s + classes);
      double z = 0.0;
      for (std::size_t k = 0; k < classes; ++k) z += std::exp(s[k] - max);
      const double log_z = max + std::log(z);
      loss += log_z - s[y[i]];
      if (g) {
        for (std::size_t k = 0; k < classes; ++k) {
          g[k] = (std::exp(s[k] - log_z) - (static_cast<int>(k) == y[i] ? 1.0 : 0.0)) *
                 inv_n;
        }
      }
    } else {
      for (std::size_t k = 0; k < classes; ++k) {
        const double t = static_cast<int>(k) == y[i] ? 1.0 : -1.0;
        const double margin = t * s[k];
        if (margin < 1.0) {
          loss += 1.0 - margin;
          if (g) g[k] = -t * inv_n;
        }
      }
    }
  }
  return loss * inv_n;
}

double SquaredNorm(const std::vector<double>& w) {
  double s = 0.0;
  for (double v : w) s += v * v;
  return s;
}

double Objective(ClassifierKind kind, const std::vector<double>& x,
                 std::span<const int> y, const LinearModel& m, double scale) {
  std::vector<double> scores(y.size() * m.classes);
  Scores(x.data(), y.size(), m.dim, m, scale, scores.data());
  return DataLoss(kind, scores, y, m.classes, nullptr) +
         0.5 * m.reg * SquaredNorm(m.weights);
}

LinearModel TrainLinear(ClassifierKind kind, const FeatureMatrix& fx,
                        std::span<const int> y, std::size_t classes, double reg,
                        const TrainOptions& options) {
  CheckTrainingInput(fx, y, classes);
  if (reg < 0.0) Fail(ErrorCode::kInvalidArgument, "regularization must be >= 0");
  const std::size_t n = fx.rows();
  const std::size_t d = fx.dim;
  const std::vector<double> x(fx.values.begin(), fx.values.end());

  LinearModel m;
  m.kind = kind;
  m.classes = classes;
  m.dim = d;
  m.reg = reg;
  m.seed = options.seed;
  m.weights.assign(classes * d, 0.0);
  m.bias.assign(classes, 0.0);
  m.input_scale = options.dropout ? 0.5 : 1.0;

  double lr = options.lr;
  if (lr <= 0.0) {
    // 1/L, with L bounding the curvature of the mean loss through the
    // mean squared norm of the bias-augmented rows.
    double mean_sq = 0.0;
    for (double v : x) mean_sq += v * v;
    mean_sq = mean_sq / static_cast<double>(n) + 1.0;
    const double curvature = kind == ClassifierKind::kLogReg ? 0.5 : 1.0;
    lr = 1.0 / (curvature * mean_sq + reg);
  }

  const std::size_t batch =
      options.batch_size == 0 ? n : std::min(options.batch_size, n);
  const int epochs = std::max(1, options.max_epochs);
  const int quarter = std::max(1, epochs / 4);
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> xb, scores, grad_scores, grad_w(classes * d);
  std::vector<int> yb;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double step = lr * std::pow(0.5, epoch / quarter);
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      xb.resize(count * d);
      yb.resize(count);
      std::uint64_t bits = 0;
      std::size_t bit = 64;
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t r = order[start + i];
        yb[i] = y[r];
        const double* src = x.data() + r * d;
        double* dst = xb.data() + i * d;
        if (!options.dropout) {
          std::copy(src, src + d, dst);
          continue;
        }
        for (std::size_t j = 0; j < d; ++j) {
          if (bit == 64) {
            bits = rng();
            bit = 0;
          }
          dst[j] = ((bits >> bit++) & 1u) ? src[j] : 0.0;
        }
      }
      scores.resize(count * classes);
      Scores(xb.data(), count, d, m, 1.0, scores.data());
      DataLoss(kind, scores, yb, classes, &grad_scores);
      // dW = G^T X + reg * W
      GemmStrided(Transpose::kYes, Transpose::kNo, classes, d, count, 1.0,
                  grad_scores.data(), classes, xb.data(), d, 0.0, grad_w.data(), d);
      for (std::size_t k = 0; k < classes * d; ++k) {
        m.weights[k] -= step * (grad_w[k] + reg * m.weights[k]);
      }
      for (std::size_t k = 0; k < classes; ++k) {
        double gb = 0.0;
        for (std::size_t i = 0; i < count; ++i) gb += grad_scores[i * classes + k];
        m.bias[k] -= step * gb;
      }
    }
    const double obj = Objective(kind, x, y, m, m.input_scale);
    if (!std::isfinite(obj)) {
      Fail(ErrorCode::kDivergence,
           "objective became non-finite in epoch " + std::to_string(epoch + 1));
    }
    m.objective_trace.push_back(obj);
  }
  return m;
}

}  // namespace

LinearModel train_logreg(const FeatureMatrix& x, std::span<const int> y,
                         std::size_t classes, double lambda,
                         const TrainOptions& options) {
  return TrainLinear(ClassifierKind::kLogReg, x, y, classes, lambda, options);
}

LinearModel train_svm(const FeatureMatrix& x, std::span<const int> y,
                      std::size_t classes, double reg, const TrainOptions& options) {
  return TrainLinear(ClassifierKind::kSvm, x, y, classes, reg, options);
}

Prediction predict(const LinearModel& model, const FeatureMatrix& x) {
  if (x.dim != model.dim) {
    Fail(ErrorCode::kDimensionMismatch,
         "model expects " + std::to_string(model.dim) + "-dim features, got " +
             std::to_string(x.dim));
  }
  Prediction p;
  const std::size_t n = x.rows();
  const std::vector<double> xd(x.values.begin(), x.values.end());
  p.scores.resize(n * model.classes);
  if (n > 0) Scores(xd.data(), n, x.dim, model, model.input_scale, p.scores.data());
  p.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* s = p.scores.data() + i * model.classes;
    p.labels[i] = static_cast<int>(std::max_element(s, s + model.classes) - s);
  }
  return p;
}

double mean_per_class_accuracy(std::span<const int> predicted,
                               std::span<const int> truth, std::size_t classes) {
  if (predicted.size() != truth.size()) {
    Fail(ErrorCode::kDimensionMismatch, "prediction and truth lengths differ");
  }
  std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // correct, total
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& [correct, total] = per_class[truth[i]];
    ++total;
    if (predicted[i] == truth[i]) ++correct;
  }
  if (per_class.empty()) Fail(ErrorCode::kEmptyClass, "no samples to score");
  if (classes != 0) {
    for (std::size_t c = 0; c < classes; ++c) {
      if (!per_class.count(static_cast<int>(c))) {
        Fail(ErrorCode::kEmptyClass,
             "class " + std::to_string(c) + " has no test samples");
      }
    }
  }
  double sum = 0.0;
  for (const auto& [label, counts] : per_class) {
    sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  return sum / static_cast<double>(per_class.size());
}

namespace {

std::map<int, std::vector<std::size_t>> RowsByClass(std::span<const int> labels) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  return by_class;
}

std::string ClassName(int label, const std::vector<std::string>& names) {
  if (label >= 0 && static_cast<std::size_t>(label) < names.size()) {
    return "'" + names[label] + "'";
  }
  return std::to_string(label);
}

std::uint64_t SubSeed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace

SplitSet make_splits(std::span<const int> labels, std::size_t per_class_train,
                     std::size_t n_splits, std::uint64_t seed,
                     std::size_t per_class_test,
                     const std::vector<std::string>& class_names) {
  if (per_class_train == 0) {
    Fail(ErrorCode::kInvalidArgument, "per_class_train must be >= 1");
  }
  const auto by_class = RowsByClass(labels);
  for (const auto& [label, rows] : by_class) {
    const std::size_t need = per_class_train + std::max<std::size_t>(per_class_test, 1);
    if (rows.size() < need) {
      Fail(ErrorCode::kInsufficientClassSize,
           "class " + ClassName(label, class_names) + " has " +
               std::to_string(rows.size()) + " samples, needs at least " +
               std::to_string(need));
    }
  }
  SplitSet set;
  set.per_class_train = per_class_train;
  set.per_class_test = per_class_test;
  set.seed = seed;
  for (std::size_t s = 0; s < n_splits; ++s) {
    std::mt19937_64 rng(SubSeed(seed, s));
    Split split;
    for (const auto& [label, rows] : by_class) {
      std::vector<std::size_t> shuffled = rows;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const std::size_t test_end =
          per_class_test == 0 ? shuffled.size() : per_class_train + per_class_test;
      split.train.insert(split.train.end(), shuffled.begin(),
                         shuffled.begin() + per_class_train);
      split.test.insert(split.test.end(), shuffled.begin() + per_class_train,
                        shuffled.begin() + test_end);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    set.splits.push_back(std::move(split));
  }
  return set;
}

Trainer MakeTrainer(ClassifierKind kind, const TrainOptions& options) {
  return [kind, options](const FeatureMatrix& x, std::span<const int> y,
                         std::size_t classes, double reg) {
    return kind == ClassifierKind::kSvm ? train_svm(x, y, classes, reg, options)
                                        : train_logreg(x, y, classes, reg, options);
  };
}

const std::vector<double>& DefaultGrid() {
  static const std::vector<double> grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  return grid;
}

CrossvalResult crossval_select(const FeatureMatrix& x, std::span<const int> y,
                               std::size_t classes, const std::vector<double>& grid,
                               Subsplit subsplit, const Trainer& trainer,
                               std::uint64_t seed) {
  if (grid.empty()) Fail(ErrorCode::kEmptyGrid, "hyperparameter grid is empty");
  CrossvalResult result;
  if (grid.size() == 1) {
    result.best = grid.front();
    result.validation_accuracy.assign(1, 0.0);
    return result;
  }
  if (subsplit.train == 0 || subsplit.validation == 0) {
    Fail(ErrorCode::kInvalidArgument, "subsplit sizes must be positive");
  }
  const SplitSet inner =
      make_splits(y, subsplit.train, 1, seed, subsplit.validation);
  const Split& split = inner.splits.front();
  const FeatureMatrix xtr = SelectRows(x, split.train);
  const FeatureMatrix xval = SelectRows(x, split.test);
  const std::vector<int> ytr = SelectLabels(y, split.train);
  const std::vector<int> yval = SelectLabels(y, split.test);
  double best_acc = -1.0;
  for (double value : grid) {
    const LinearModel m = trainer(xtr, ytr, classes, value);
    const double acc = mean_per_class_accuracy(predict(m, xval).labels, yval);
    result.validation_accuracy.push_back(acc);
    if (acc > best_acc || (acc == best_acc && value > result.best)) {
      best_acc = acc;
      result.best = value;
    }
  }
  return result;
}

std::string_view DomainModeName(DomainMode mode) {
  switch (mode) {
    case DomainMode::kSource: return "S";
    case DomainMode::kTarget: return "T";
    case DomainMode::kSourceTarget: return "ST";
  }
  return "?";
}

FeatureMatrix domain_compose(const FeatureMatrix& source,
                             const FeatureMatrix& target, DomainMode mode) {
  if (source.dim != target.dim) {
    Fail(ErrorCode::kDimensionMismatch,
         "source has " + std::to_string(source.dim) + "-dim features, target " +
             std::to_string(target.dim));
  }
  if (source.rows() > 0 && target.rows() > 0) {
    const std::set<std::string> a(source.labels.begin(), source.labels.end());
    const std::set<std::string> b(target.labels.begin(), target.labels.end());
    if (a != b || source.has_labels() != target.has_labels()) {
      Fail(ErrorCode::kLabelDictMismatch,
           "source and target use different label sets");
    }
  }
  switch (mode) {
    case DomainMode::kSource:
      return source;
    case DomainMode::kTarget:
      return target;
    case DomainMode::kSourceTarget: {
      FeatureMatrix out = source;
      out.ids.insert(out.ids.end(), target.ids.begin(), target.ids.end());
      out.labels.insert(out.labels.end(), target.labels.begin(), target.labels.end());
      out.values.insert(out.values.end(), target.values.begin(), target.values.end());
      return out;
    }
  }
  return source;
}

void EvalReport::Summarize() {
  mean = 0.0;
  stddev = 0.0;
  if (splits.empty()) return;
  for (const SplitResult& s : splits) mean += s.accuracy;
  mean /= static_cast<double>(splits.size());
  if (splits.size() > 1) {
    double ss = 0.0;
    for (const SplitResult& s : splits) ss += (s.accuracy - mean) * (s.accuracy - mean);
    stddev = std::sqrt(ss / static_cast<double>(splits.size() - 1));
  }
}

namespace {

const FeatureMatrix& RequireLabels(const FeatureMatrix& f, const char* what) {
  if (!f.has_labels()) {
    Fail(ErrorCode::kInvalidArgument, std::string(what) + " features carry no labels");
  }
  return f;
}

SplitResult TestModel(const LinearModel& model, const FeatureMatrix& x,
                      std::span<const int> y, std::size_t classes, double reg) {
  const Prediction p = predict(model, x);
  SplitResult r;
  r.accuracy = mean_per_class_accuracy(p.labels, y);
  r.chosen_reg = reg;
  r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < y.size(); ++i) ++r.confusion[y[i]][p.labels[i]];
  return r;
}

}  // namespace

EvalReport evaluate_protocol(const FeatureMatrix& f, const ProtocolOptions& options) {
  RequireLabels(f, "evaluation");
  const LabelEncoding enc = EncodeLabels(f.labels);
  const std::size_t classes = enc.names.size();
  if (classes < 2) Fail(ErrorCode::kSingleClass, "evaluation needs >= 2 classes");
  const SplitSet splits = make_splits(enc.codes, options.per_class_train,
                                      options.n_splits, options.seed,
                                      options.per_class_test, enc.names);
  EvalReport report;
  report.protocol = options.name;
  report.classifier = std::string(ClassifierName(options.classifier));
  report.dropout = options.train.dropout;
  report.per_class_train = options.per_class_train;
  report.seed = options.seed;
  report.class_names = enc.names;
  for (std::size_t s = 0; s < splits.splits.size(); ++s) {
    const Split& split = splits.splits[s];
    TrainOptions train = options.train;
    train.seed = SubSeed(options.seed, 1000 + s);
    const Trainer trainer = MakeTrainer(options.classifier, train);
    const FeatureMatrix xtr = SelectRows(f, split.train);
    const std::vector<int> ytr = SelectLabels(enc.codes, split.train);
    const CrossvalResult cv = crossval_select(xtr, ytr, classes, options.grid,
                                              options.subsplit, trainer,
                                              SubSeed(options.seed, 2000 + s));
    const LinearModel model = trainer(xtr, ytr, classes, cv.best);
    const std::vector<int> yte = SelectLabels(enc.codes, split.test);
    report.splits.push_back(
        TestModel(model, SelectRows(f, split.test), yte, classes, cv.best));
  }
  report.Summarize();
  return report;
}

namespace {

std::vector<std::size_t> SamplePerClass(std::span<const int> labels, std::size_t k,
                                        std::mt19937_64& rng,
                                        const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& [label, rows] : RowsByClass(labels)) {
    if (rows.size() < k) {
      Fail(ErrorCode::kInsufficientClassSize,
           "source class " + ClassName(label, names) + " has " +
               std::to_string(rows.size()) + " samples, needs " + std::to_string(k));
    }
    std::vector<std::size_t> shuffled = rows;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    out.insert(out.end(), shuffled.begin(), shuffled.begin() + k);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

EvalReport evaluate_domain(const FeatureMatrix& source, const FeatureMatrix& target,
                           const DomainOptions& options) {
  RequireLabels(source, "source");
  RequireLabels(target, "target");
  // Validates dims and label dictionaries before any sampling.
  domain_compose(source, target, DomainMode::kSourceTarget);
  const LabelEncoding tenc = EncodeLabels(target.labels);
  const std::size_t classes = tenc.names.size();
  if (classes < 2) Fail(ErrorCode::kSingleClass, "evaluation needs >= 2 classes");
  const LabelEncoding senc = EncodeLabels(source.labels);

  const SplitSet tsplits = make_splits(tenc.codes, options.target_per_class,
                                       options.n_splits, options.seed, 0, tenc.names);
  EvalReport report;
  report.protocol = "domain-" + std::string(DomainModeName(options.mode));
  report.classifier = std::string(ClassifierName(options.classifier));
  report.dropout = options.train.dropout;
  report.per_class_train = options.mode == DomainMode::kTarget
                               ? options.target_per_class
                               : options.source_per_class;
  report.seed = options.seed;
  report.class_names = tenc.names;
  for (std::size_t s = 0; s < tsplits.splits.size(); ++s) {
    std::mt19937_64 rng(SubSeed(options.seed, 3000 + s));
    const std::vector<std::size_t> src_rows =
        SamplePerClass(senc.codes, options.source_per_class, rng, senc.names);
    const FeatureMatrix train = domain_compose(
        SelectRows(source, src_rows), SelectRows(target, tsplits.splits[s].train),
        options.mode);
    // Map through the target dictionary so class indices agree.
    std::vector<int> ytr;
    for (const std::string& l : train.labels) {
      ytr.push_back(static_cast<int>(
          std::lower_bound(tenc.names.begin(), tenc.names.end(), l) -
          tenc.names.begin()));
    }
    TrainOptions topts = options.train;
    topts.seed = SubSeed(options.seed, 1000 + s);
    const LinearModel model =
        MakeTrainer(options.classifier, topts)(train, ytr, classes, options.reg);
    const std::vector<int> yte = SelectLabels(tenc.codes, tsplits.splits[s].test);
    report.splits.push_back(TestModel(model, SelectRows(target, tsplits.splits[s].test),
                                      yte, classes, options.reg));
  }
  report.Summarize();
  return report;
}

std::vector<EvalReport> learning_curve(const FeatureMatrix& f,
                                       const std::vector<std::size_t>& sizes,
                                       std::size_t n_splits,
                                       ClassifierKind classifier, double reg,
                                       const TrainOptions& train,
                                       std::uint64_t seed) {
  std::vector<EvalReport> reports;
  for (std::size_t size : sizes) {
    ProtocolOptions opts;
    opts.classifier = classifier;
    opts.train = train;
    opts.per_class_train = size;
    opts.n_splits = n_splits;
    opts.grid = {reg};
    opts.seed = seed;
    opts.name = "curve-" + std::to_string(size);
    reports.push_back(evaluate_protocol(f, opts));
  }
  return reports;
}

}  // namespace convfeat
