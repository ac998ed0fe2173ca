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

#include "convfeat/embed.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>

#include "convfeat/io.h"
#include "convfeat/parallel.h"

namespace convfeat {

namespace {

constexpr double kEntropyTolerance = 1e-5;
constexpr int kMaxBisectionSteps = 200;

std::vector<double> SquaredDistances(const std::vector<double>& rows, std::size_t n,
                                     std::size_t dim) {
  std::vector<double> d(n * n, 0.0);
  ParallelFor(0, n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double* a = rows.data() + i * dim;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double* b = rows.data() + j * dim;
        double s = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          const double diff = a[k] - b[k];
          s += diff * diff;
        }
        d[i * n + j] = s;
      }
    }
  });
  return d;
}

// Fills row i of the conditional affinities; returns the achieved perplexity
// and stores the precision in *beta_out.
double ConditionalRow(const double* dist, std::size_t n, std::size_t i,
                      double target_entropy, double* p, double* beta_out) {
  double d_min = std::numeric_limits<double>::infinity();
  double d_sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    d_min = std::min(d_min, dist[j]);
    d_sum += dist[j];
  }
  const double spread = d_sum / static_cast<double>(n - 1) - d_min;
  double beta = spread > 0.0 ? 1.0 / spread : 1.0;
  double beta_lo = 0.0;
  double beta_hi = std::numeric_limits<double>::infinity();
  double entropy = 0.0;
  double used_beta = beta;
  for (int step = 0; step < kMaxBisectionSteps; ++step) {
    used_beta = beta;
    double sum = 0.0;
    double weighted = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) {
        p[j] = 0.0;
        continue;
      }
      const double shifted = dist[j] - d_min;
      p[j] = std::exp(-beta * shifted);
      sum += p[j];
      weighted += shifted * p[j];
    }
    entropy = std::log(sum) + beta * weighted / sum;
    for (std::size_t j = 0; j < n; ++j) p[j] /= sum;
    const double gap = entropy - target_entropy;
    if (std::abs(gap) < kEntropyTolerance) break;
    if (gap > 0.0) {
      beta_lo = beta;
      beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta + beta_hi);
    } else {
      beta_hi = beta;
      beta = 0.5 * (beta + beta_lo);
    }
  }
  *beta_out = used_beta;
  return std::exp(entropy);
}

bool AllRowsIdentical(const std::vector<double>& rows, std::size_t n, std::size_t dim) {
  for (std::size_t i = 1; i < n; ++i) {
    if (!std::equal(rows.begin(), rows.begin() + dim, rows.begin() + i * dim)) {
      return false;
    }
  }
  return true;
}

void CheckFeasible(std::size_t n, double perplexity) {
  if (!(perplexity > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "perplexity must be positive");
  }
  if (static_cast<double>(n) < 3.0 * perplexity + 1.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "perplexity %g needs at least %g points, got %zu", perplexity,
                  std::ceil(3.0 * perplexity + 1.0), n);
    Fail(ErrorCode::kPerplexityInfeasible, buf);
  }
}

// Adds N(0, 1e-8) noise to every row that repeats an earlier one.
std::size_t JitterDuplicates(std::vector<double>& rows, std::size_t n, std::size_t dim,
                             std::uint64_t seed) {
  std::set<std::vector<double>> seen;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> noise(0.0, 1e-8);
  std::size_t jittered = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto begin = rows.begin() + i * dim;
    std::vector<double> row(begin, begin + dim);
    while (seen.count(row)) {
      for (double& v : row) v += noise(rng);
    }
    if (!std::equal(row.begin(), row.end(), begin)) {
      std::copy(row.begin(), row.end(), begin);
      ++jittered;
    }
    seen.insert(std::move(row));
  }
  return jittered;
}

double KlDivergence(const std::vector<double>& p, const std::vector<double>& q) {
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0 && q[k] > 0.0) kl += p[k] * std::log(p[k] / q[k]);
  }
  return kl;
}

}  // namespace

InputAffinities compute_input_affinities(const std::vector<double>& rows,
                                         std::size_t dim, double perplexity) {
  if (dim == 0 || rows.size() % dim != 0) {
    Fail(ErrorCode::kDimensionMismatch, "rows are not a multiple of dim");
  }
  const std::size_t n = rows.size() / dim;
  CheckFeasible(n, perplexity);
  if (AllRowsIdentical(rows, n, dim)) {
    Fail(ErrorCode::kDegenerateInput, "all rows are identical");
  }
  const std::vector<double> dist = SquaredDistances(rows, n, dim);
  InputAffinities out;
  out.n = n;
  out.perplexity.resize(n);
  out.beta.resize(n);
  std::vector<double> cond(n * n);
  const double target = std::log(perplexity);
  ParallelFor(0, n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      out.perplexity[i] =
          ConditionalRow(dist.data() + i * n, n, i, target, cond.data() + i * n, &out.beta[i]);
    }
  });
  out.p.resize(n * n);
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) * scale;
    }
  }
  return out;
}

InputAffinities compute_input_affinities(const FeatureMatrix& f, double perplexity) {
  return compute_input_affinities(std::vector<double>(f.values.begin(), f.values.end()),
                                  f.dim, perplexity);
}

Embedding tsne(const FeatureMatrix& f, const TsneOptions& options) {
  const std::size_t n = f.rows();
  CheckFeasible(n, options.perplexity);
  if (f.dim == 0) Fail(ErrorCode::kDimensionMismatch, "features have zero dim");
  std::vector<double> rows(f.values.begin(), f.values.end());
  if (AllRowsIdentical(rows, n, f.dim)) {
    Fail(ErrorCode::kDegenerateInput, "all rows are identical");
  }
  Embedding e;
  e.ids = f.ids;
  e.jittered_rows = JitterDuplicates(rows, n, f.dim, options.seed);
  const std::vector<double> p =
      compute_input_affinities(rows, f.dim, options.perplexity).p;

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> init(0.0, 1e-4);
  std::vector<double>& y = e.coords;
  y.resize(2 * n);
  for (double& v : y) v = init(rng);
  std::vector<double> update(2 * n, 0.0), gains(2 * n, 1.0), grad(2 * n);
  std::vector<double> num(n * n), row_sum(n);

  for (int iter = 0; iter < options.iters; ++iter) {
    // Student-t kernel and its normalizer.
    ParallelFor(0, n, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) {
            num[i * n + j] = 0.0;
            continue;
          }
          const double dx = y[2 * i] - y[2 * j];
          const double dy = y[2 * i + 1] - y[2 * j + 1];
          num[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
          s += num[i * n + j];
        }
        row_sum[i] = s;
      }
    });
    double z = 0.0;
    for (double s : row_sum) z += s;
    const double exaggeration =
        iter < options.exaggeration_iters ? options.exaggeration : 1.0;
    ParallelFor(0, n, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        double gx = 0.0, gy = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double w = num[i * n + j];
          const double m = (exaggeration * p[i * n + j] - w / z) * w;
          gx += m * (y[2 * i] - y[2 * j]);
          gy += m * (y[2 * i + 1] - y[2 * j + 1]);
        }
        grad[2 * i] = 4.0 * gx;
        grad[2 * i + 1] = 4.0 * gy;
      }
    });
    const double momentum =
        iter < options.momentum_switch ? options.momentum : options.final_momentum;
    for (std::size_t k = 0; k < 2 * n; ++k) {
      const bool same_sign = (grad[k] > 0.0) == (update[k] > 0.0);
      gains[k] = same_sign ? std::max(gains[k] * 0.8, 0.01) : gains[k] + 0.2;
      update[k] = momentum * update[k] - options.learning_rate * gains[k] * grad[k];
      y[k] += update[k];
    }
    double cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cx += y[2 * i];
      cy += y[2 * i + 1];
    }
    cx /= static_cast<double>(n);
    cy /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[2 * i] -= cx;
      y[2 * i + 1] -= cy;
    }
    const bool checkpoint = options.kl_interval > 0 &&
                            ((iter + 1) % options.kl_interval == 0 ||
                             iter + 1 == options.iters);
    if (checkpoint) {
      // KL at the pre-update positions, whose kernel is already in `num`.
      std::vector<double> q(n * n);
      for (std::size_t k = 0; k < n * n; ++k) q[k] = num[k] / z;
      e.kl_iterations.push_back(iter + 1);
      e.kl_trace.push_back(KlDivergence(p, q));
    }
  }
  for (double v : y) {
    if (!std::isfinite(v)) Fail(ErrorCode::kDivergence, "t-SNE diverged");
  }
  if (f.has_labels()) e.groups = f.labels;
  return e;
}

Embedding tsne(const FeatureMatrix& f, double perplexity, int iters,
               std::uint64_t seed) {
  TsneOptions options;
  options.perplexity = perplexity;
  options.iters = iters;
  options.seed = seed;
  return tsne(f, options);
}

GroupMap ParseGroupMap(std::string_view text) {
  GroupMap map;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view() : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size()) {
      Fail(ErrorCode::kParseError,
           "group map line " + std::to_string(line_no) + ": expected label<TAB>group");
    }
    map[std::string(line.substr(0, tab))] = std::string(line.substr(tab + 1));
  }
  return map;
}

GroupMap load_group_map(const std::string& path) {
  return ParseGroupMap(ReadFile(path));
}

std::vector<std::string> AssignGroups(const FeatureMatrix& f, const GroupMap& groups) {
  std::vector<std::string> out;
  out.reserve(f.labels.size());
  for (const std::string& label : f.labels) {
    auto it = groups.find(label);
    out.push_back(it == groups.end() ? label : it->second);
  }
  return out;
}

Embedding embed_features(const FeatureMatrix& f, const GroupMap& groups,
                         const TsneOptions& options, std::size_t projection_dim) {
  Embedding e = f.dim > projection_dim
                    ? tsne(random_project(f, projection_dim, options.seed), options)
                    : tsne(f, options);
  e.groups = AssignGroups(f, groups);
  return e;
}

namespace {

constexpr std::array<const char*, 10> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string XmlEscape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string Fmt(const char* format, double a, double b = 0.0) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, a, b);
  return buf;
}

}  // namespace

std::string render_scatter(const Embedding& e,
                           const std::map<std::string, std::string>& group_colors) {
  constexpr double kWidth = 800.0, kHeight = 600.0;
  constexpr double kMargin = 20.0, kPlotSize = 560.0, kLegendX = 600.0;
  const std::size_t n = e.size();
  std::vector<std::string> groups = e.groups;
  if (groups.size() != n) groups.assign(n, "all");

  const std::set<std::string> distinct(groups.begin(), groups.end());
  std::map<std::string, std::string> colors;
  std::size_t next = 0;
  for (const std::string& g : distinct) {
    auto it = group_colors.find(g);
    colors[g] = it != group_colors.end() ? it->second : kPalette[next++ % kPalette.size()];
  }

  double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || e.x(i) < min_x) min_x = e.x(i);
    if (i == 0 || e.x(i) > max_x) max_x = e.x(i);
    if (i == 0 || e.y(i) < min_y) min_y = e.y(i);
    if (i == 0 || e.y(i) > max_y) max_y = e.y(i);
  }
  const double span = std::max({max_x - min_x, max_y - min_y, 1e-12});
  const double scale = (kPlotSize - 2.0 * kMargin) / span;
  const double off_x = kMargin + 0.5 * (kPlotSize - 2.0 * kMargin - (max_x - min_x) * scale);
  const double off_y = kMargin + 0.5 * (kPlotSize - 2.0 * kMargin - (max_y - min_y) * scale);

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + Fmt("%.0f", kWidth) + "\" height=\"" +
         Fmt("%.0f", kHeight) + "\" fill=\"white\"/>\n";
  svg += "<rect x=\"" + Fmt("%.0f", kMargin / 2) + "\" y=\"" + Fmt("%.0f", kMargin / 2) +
         "\" width=\"" + Fmt("%.0f", kPlotSize - kMargin) + "\" height=\"" +
         Fmt("%.0f", kPlotSize - kMargin) +
         "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
  svg += "<g class=\"points\">\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double px = off_x + (e.x(i) - min_x) * scale;
    // SVG y grows downward.
    const double py = kPlotSize - (off_y + (e.y(i) - min_y) * scale);
    svg += "<circle cx=\"" + Fmt("%.3f", px) + "\" cy=\"" + Fmt("%.3f", py) +
           "\" r=\"3\" fill=\"" + XmlEscape(colors[groups[i]]) + "\"/>\n";
  }
  svg += "</g>\n<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  std::size_t row = 0;
  for (const std::string& g : distinct) {
    const double y = 30.0 + 20.0 * static_cast<double>(row++);
    svg += "<rect x=\"" + Fmt("%.0f", kLegendX) + "\" y=\"" + Fmt("%.0f", y - 10.0) +
           "\" width=\"12\" height=\"12\" fill=\"" + XmlEscape(colors[g]) + "\"/>\n";
    svg += "<text x=\"" + Fmt("%.0f", kLegendX + 18.0) + "\" y=\"" + Fmt("%.0f", y) +
           "\">" + XmlEscape(g) + "</text>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

std::string EmbeddingToCsv(const Embedding& e) {
  std::string out = "id,group,x,y\n";
  for (std::size_t i = 0; i < e.size(); ++i) {
    out += e.ids[i] + "," + (i < e.groups.size() ? e.groups[i] : std::string()) + ",";
    out += Fmt("%.9g,%.9g", e.x(i), e.y(i)) + "\n";
  }
  return out;
}

}  // namespace convfeat
