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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <set>

#include "gtest/gtest.h"
#include "testing/oracles.h"
#include "testing/synthetic.h"

namespace convfeat {
namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

std::vector<double> Doubles(const FeatureMatrix& f) { return {f.values.begin(), f.values.end()}; }

// Perplexity exp(H) of p(.|i) computed directly from the reported precision.
double OraclePerplexity(const std::vector<double>& rows, std::size_t n, std::size_t dim,
                        std::size_t i, double beta, std::vector<double>* cond) {
  std::vector<double> d(n, 0.0);
  double d_min = INFINITY;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    for (std::size_t k = 0; k < dim; ++k) {
      const double diff = rows[i * dim + k] - rows[j * dim + k];
      d[j] += diff * diff;
    }
    d_min = std::min(d_min, d[j]);
  }
  double z = 0.0;
  cond->assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    (*cond)[j] = std::exp(-beta * (d[j] - d_min));
    z += (*cond)[j];
  }
  double h = 0.0;
  for (double& p : *cond) {
    p /= z;
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::exp(h);
}

TEST(AffinitiesTest, PerplexityCalibratedForEveryPoint) {
  for (const double perplexity : {5.0, 15.0, 30.0}) {
    const FeatureMatrix f = testing::GaussianBlobs(4, 30, 12, 3.0, 1.0, 7);
    const std::vector<double> rows = Doubles(f);
    const InputAffinities a = compute_input_affinities(f, perplexity);
    ASSERT_EQ(a.n, 120u);
    std::vector<std::vector<double>> cond(a.n);
    for (std::size_t i = 0; i < a.n; ++i) {
      const double achieved = OraclePerplexity(rows, a.n, f.dim, i, a.beta[i], &cond[i]);
      EXPECT_NEAR(achieved / perplexity, 1.0, 1e-3) << "point " << i;
      EXPECT_NEAR(a.perplexity[i], achieved, 1e-6 * perplexity);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.n; ++i) {
      for (std::size_t j = 0; j < a.n; ++j) {
        const double pij = a.p[i * a.n + j];
        EXPECT_GE(pij, 0.0);
        EXPECT_EQ(pij, a.p[j * a.n + i]);
        EXPECT_NEAR(pij, (cond[i][j] + cond[j][i]) / (2.0 * a.n), 1e-9);
        sum += pij;
      }
      EXPECT_EQ(a.p[i * a.n + i], 0.0);
    }
    EXPECT_NEAR(sum, 1.0, 1e-8);
  }
}

TEST(AffinitiesTest, RotationInvariance) {
  const FeatureMatrix f = testing::GaussianBlobs(3, 20, 8, 2.0, 1.0, 3);
  const std::size_t d = f.dim;
  // Random orthogonal matrix by Gram-Schmidt.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<double> q(d * d);
  for (double& v : q) v = g(rng);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t s = 0; s < r; ++s) {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += q[r * d + k] * q[s * d + k];
      for (std::size_t k = 0; k < d; ++k) q[r * d + k] -= dot * q[s * d + k];
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < d; ++k) norm += q[r * d + k] * q[r * d + k];
    for (std::size_t k = 0; k < d; ++k) q[r * d + k] /= std::sqrt(norm);
  }
  const std::vector<double> rows = Doubles(f);
  std::vector<double> rotated(rows.size(), 0.0);
  for (std::size_t i = 0; i < f.rows(); ++i) {
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t k = 0; k < d; ++k) rotated[i * d + r] += q[r * d + k] * rows[i * d + k];
    }
  }
  const InputAffinities a = compute_input_affinities(rows, d, 10.0);
  const InputAffinities b = compute_input_affinities(rotated, d, 10.0);
  for (std::size_t k = 0; k < a.p.size(); ++k) EXPECT_NEAR(a.p[k], b.p[k], 1e-6);
}

TEST(AffinitiesTest, Errors) {
  FeatureMatrix two;
  two.dim = 2;
  two.append("a", std::vector<float>{0, 0});
  two.append("b", std::vector<float>{1, 1});
  EXPECT_EQ(CodeOf([&] { tsne(two, 30.0, 10, 1); }), ErrorCode::kPerplexityInfeasible);
  FeatureMatrix same;
  same.dim = 3;
  for (int i = 0; i < 10; ++i) same.append("s" + std::to_string(i), std::vector<float>{1, 2, 3});
  EXPECT_EQ(CodeOf([&] { tsne(same, 2.0, 10, 1); }), ErrorCode::kDegenerateInput);
  EXPECT_EQ(CodeOf([&] { compute_input_affinities(std::vector<double>(7), 2, 1.0); }),
            ErrorCode::kDimensionMismatch);
}

class TsneClusterTest : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(TsneClusterTest, ThreeClustersSeparate) {
  const FeatureMatrix f = testing::GaussianBlobs(3, 30, 10, 10.0, 1.0, 40 + GetParam());
  TsneOptions opts;
  opts.perplexity = 20.0;
  opts.seed = GetParam();
  const Embedding e = tsne(f, opts);
  ASSERT_EQ(e.size(), 90u);
  for (double c : e.coords) EXPECT_TRUE(std::isfinite(c));
  EXPECT_GE(testing::NearestNeighborAgreement(e.coords, f.labels), 0.95);
  // KL over the second half: no rise above 1e-3 between checkpoints.
  ASSERT_FALSE(e.kl_trace.empty());
  EXPECT_EQ(e.kl_iterations.back(), opts.iters);
  for (std::size_t k = 1; k < e.kl_trace.size(); ++k) {
    if (e.kl_iterations[k - 1] < opts.iters / 2) continue;
    EXPECT_LE(e.kl_trace[k], e.kl_trace[k - 1] + 1e-3) << "iteration " << e.kl_iterations[k];
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, TsneClusterTest, ::testing::Values(0, 1, 2, 3, 4));

TEST(TsneTest, DeterministicPerSeed) {
  const FeatureMatrix f = testing::GaussianBlobs(2, 12, 5, 3.0, 1.0, 1);
  const Embedding a = tsne(f, 5.0, 200, 9);
  const Embedding b = tsne(f, 5.0, 200, 9);
  EXPECT_EQ(a.coords, b.coords);
  EXPECT_EQ(a.ids, f.ids);
  EXPECT_NE(tsne(f, 5.0, 200, 10).coords, a.coords);
}

TEST(TsneTest, DuplicatesAreJittered) {
  FeatureMatrix f = testing::GaussianBlobs(2, 10, 4, 3.0, 1.0, 2);
  f.append("dup0", f.row(0), f.labels[0]);
  f.append("dup1", f.row(0), f.labels[0]);
  const Embedding e = tsne(f, 4.0, 100, 1);
  EXPECT_EQ(e.jittered_rows, 2u);
  for (double c : e.coords) EXPECT_TRUE(std::isfinite(c));
}

TEST(GroupMapTest, ParseAndAssign) {
  const GroupMap m = ParseGroupMap("# label to group\ncat\tanimal\ndog\tanimal\n\ncar\tvehicle\n");
  EXPECT_EQ(m.size(), 3u);
  EXPECT_EQ(m.at("dog"), "animal");
  EXPECT_EQ(CodeOf([] { ParseGroupMap("cat animal\n"); }), ErrorCode::kParseError);
  FeatureMatrix f;
  f.dim = 1;
  f.append("a", std::vector<float>{0}, "cat");
  f.append("b", std::vector<float>{0}, "boat");
  EXPECT_EQ(AssignGroups(f, m), (std::vector<std::string>{"animal", "boat"}));
}

TEST(EmbedFeaturesTest, ProjectsWideFeaturesFirst) {
  FeatureMatrix f = testing::GaussianBlobs(2, 10, 600, 5.0, 1.0, 3);
  TsneOptions opts;
  opts.perplexity = 5.0;
  opts.iters = 50;
  const Embedding e = embed_features(f, {{"c0", "first"}}, opts);
  EXPECT_EQ(e.size(), 20u);
  EXPECT_EQ(e.groups.front(), "first");
  EXPECT_EQ(e.groups.back(), "c1");
  // Same result as projecting by hand with the t-SNE seed.
  const Embedding manual = tsne(random_project(f, 512, opts.seed), opts);
  EXPECT_EQ(e.coords, manual.coords);
}

Embedding Points(const std::vector<std::pair<double, double>>& xy,
                 const std::vector<std::string>& groups) {
  Embedding e;
  for (std::size_t i = 0; i < xy.size(); ++i) {
    e.coords.push_back(xy[i].first);
    e.coords.push_back(xy[i].second);
    e.ids.push_back("p" + std::to_string(i));
  }
  e.groups = groups;
  return e;
}

std::size_t Count(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (std::size_t pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + 1)) ++n;
  return n;
}

TEST(ScatterTest, EmptyEmbeddingIsValidDocument) {
  const std::string svg = render_scatter(Embedding{});
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("</svg>\n"), std::string::npos);
  EXPECT_EQ(Count(svg, "<circle"), 0u);
  EXPECT_EQ(Count(svg, "<text"), 0u);
}

TEST(ScatterTest, LegendPerGroupAndDeterminism) {
  const Embedding e = Points({{0, 0}, {1, 1}, {2, 0}, {3, 1}}, {"b", "a", "b", "a"});
  const std::string svg = render_scatter(e, {{"b", "#123456"}});
  EXPECT_EQ(Count(svg, "<circle"), 4u);
  EXPECT_EQ(Count(svg, "<text"), 2u);
  EXPECT_EQ(Count(svg, "fill=\"#123456\""), 3u);  // two points and the legend swatch
  EXPECT_LT(svg.find(">a</text>"), svg.find(">b</text>"));
  EXPECT_EQ(render_scatter(e, {{"b", "#123456"}}), svg);
  EXPECT_EQ(Count(render_scatter(Points({{0, 0}, {1, 1}}, {})), "<text"), 1u);
}

TEST(ScatterTest, PointsStayInsidePlotArea) {
  const Embedding e = Points({{-100, 5}, {300, -7}, {0, 0}}, {"g", "g", "h"});
  const std::string svg = render_scatter(e);
  const std::regex circle("cx=\"([-0-9.]+)\" cy=\"([-0-9.]+)\"");
  int seen = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), circle); it != std::sregex_iterator();
       ++it) {
    const double cx = std::stod((*it)[1]);
    const double cy = std::stod((*it)[2]);
    EXPECT_GE(cx, 0.0);
    EXPECT_LE(cx, 560.0);
    EXPECT_GE(cy, 0.0);
    EXPECT_LE(cy, 560.0);
    ++seen;
  }
  EXPECT_EQ(seen, 3);
}

TEST(ScatterTest, CsvExport) {
  const Embedding e = Points({{0.5, -1.25}}, {"g"});
  EXPECT_EQ(EmbeddingToCsv(e), "id,group,x,y\np0,g,0.5,-1.25\n");
}

}  // namespace
}  // namespace convfeat
