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

#include "convfeat/tensor.h"

#include <cmath>
#include <limits>
#include <random>
#include <tuple>
#include <vector>

#include "convfeat/parallel.h"
#include "gtest/gtest.h"
#include "testing/oracles.h"

namespace convfeat {
namespace {

std::vector<double> RandomValues(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

TEST(ShapeTest, SizesAndOffsets) {
  const Shape4 s{2, 3, 4, 5};
  EXPECT_EQ(s.size(), 120u);
  EXPECT_EQ(s.sample_size(), 60u);
  Tensor t(s);
  EXPECT_EQ(t.offset(1, 2, 3, 4), 119u);
  EXPECT_EQ(t.offset(0, 1, 0, 0), 20u);
  EXPECT_EQ(ToString(s), "(2,3,4,5)");
}

TEST(TensorTest, DataLengthMustMatchShape) {
  EXPECT_THROW(Tensor(Shape4{1, 1, 2, 2}, std::vector<float>(3)), Error);
}

TEST(TensorTest, ReshapeKeepsOrder) {
  Tensor t(Shape4{1, 2, 2, 2}, std::vector<float>{0, 1, 2, 3, 4, 5, 6, 7});
  const Tensor r = reshape_view(t, Shape4{2, 4, 1, 1});
  EXPECT_EQ(r.at(1, 2, 0, 0), 6.0f);
  EXPECT_THROW(t.reshape(Shape4{1, 1, 1, 7}), Error);
}

TEST(TensorTest, CheckFiniteRejectsNanAndInf) {
  std::vector<float> v = {1.0f, 2.0f};
  EXPECT_NO_THROW(CheckFinite<float>(v, "v"));
  v[1] = std::numeric_limits<float>::quiet_NaN();
  try {
    CheckFinite<float>(v, "v");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
  v[1] = std::numeric_limits<float>::infinity();
  EXPECT_THROW(CheckFinite<float>(v, "v"), Error);
}

TEST(GemmTest, IdentityLeavesOperandUnchanged) {
  MatrixD a(3, 4, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  MatrixD c(3, 4);
  gemm(MatrixD::Identity(3), a, Transpose::kNo, Transpose::kNo, 1.0, 0.0, c);
  EXPECT_EQ(c, a);
}

TEST(GemmTest, RejectsMismatchedShapes) {
  Matrix a(2, 3), b(4, 2), c(2, 2);
  try {
    gemm(a, b, Transpose::kNo, Transpose::kNo, 1.0f, 0.0f, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  Matrix b2(3, 5);
  EXPECT_THROW(gemm(a, b2, Transpose::kNo, Transpose::kNo, 1.0f, 0.0f, c), Error);
}

// Random shapes, including ones that cross every cache-block boundary.
class GemmOracleTest : public ::testing::TestWithParam<std::tuple<bool, bool>> {};

TEST_P(GemmOracleTest, MatchesTripleLoop) {
  const auto [ta, tb] = GetParam();
  std::mt19937_64 rng(11 + 2 * ta + tb);
  const std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> shapes = {
      {1, 1, 1}, {7, 5, 3}, {6, 16, 9}, {13, 33, 300}, {97, 18, 40},
      {1, 70, 513}, {200, 3, 17}, {5, 2100, 4}};
  for (const auto& [m, n, k] : shapes) {
    const auto a = RandomValues(m * k, rng);
    const auto b = RandomValues(k * n, rng);
    const auto c0 = RandomValues(m * n, rng);
    const double alpha = 0.75, beta = -0.5;
    const auto expected = testing::NaiveGemm(ta, tb, m, n, k, alpha, a, b, beta, c0);
    std::vector<double> c = c0;
    GemmStrided<double>(ta ? Transpose::kYes : Transpose::kNo,
                        tb ? Transpose::kYes : Transpose::kNo, m, n, k, alpha, a.data(),
                        ta ? m : k, b.data(), tb ? k : n, beta, c.data(), n);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      max_diff = std::max(max_diff, std::abs(c[i] - expected[i]));
    }
    EXPECT_LT(max_diff, 1e-10) << m << "x" << n << "x" << k;

    std::vector<float> af(a.begin(), a.end()), bf(b.begin(), b.end());
    std::vector<float> cf(c0.begin(), c0.end());
    GemmStrided<float>(ta ? Transpose::kYes : Transpose::kNo,
                       tb ? Transpose::kYes : Transpose::kNo, m, n, k, 0.75f, af.data(),
                       ta ? m : k, bf.data(), tb ? k : n, -0.5f, cf.data(), n);
    for (std::size_t i = 0; i < cf.size(); ++i) {
      ASSERT_NEAR(cf[i], expected[i], 1e-4 * std::sqrt(static_cast<double>(k)) + 1e-5);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllTransposes, GemmOracleTest,
                         ::testing::Combine(::testing::Bool(), ::testing::Bool()));

TEST(GemmTest, BetaOneAccumulatesAndZeroAlphaOnlyScales) {
  MatrixD a(2, 2, {1, 2, 3, 4});
  MatrixD c(2, 2, {1, 1, 1, 1});
  gemm(a, MatrixD::Identity(2), Transpose::kNo, Transpose::kNo, 1.0, 1.0, c);
  EXPECT_EQ(c, MatrixD(2, 2, {2, 3, 4, 5}));
  gemm(a, a, Transpose::kNo, Transpose::kNo, 0.0, 2.0, c);
  EXPECT_EQ(c, MatrixD(2, 2, {4, 6, 8, 10}));
}

TEST(GemmTest, ThreadCountDoesNotChangeBits) {
  std::mt19937_64 rng(5);
  const std::size_t m = 150, n = 90, k = 700;
  const auto ad = RandomValues(m * k, rng);
  const auto bd = RandomValues(k * n, rng);
  std::vector<float> a(ad.begin(), ad.end()), b(bd.begin(), bd.end());
  const int saved = NumThreads();
  std::vector<std::vector<float>> results;
  for (int threads : {1, 3}) {
    SetNumThreads(threads);
    for (Transpose tb : {Transpose::kNo, Transpose::kYes}) {
      std::vector<float> c(m * n);
      GemmStrided<float>(Transpose::kNo, tb, m, n, k, 1.0f, a.data(), k, b.data(),
                         tb == Transpose::kYes ? k : n, 0.0f, c.data(), n);
      results.push_back(std::move(c));
    }
  }
  SetNumThreads(saved);
  EXPECT_EQ(results[0], results[2]);
  EXPECT_EQ(results[1], results[3]);
}

TEST(ParallelTest, CoversRangeExactlyOnce) {
  const int saved = NumThreads();
  for (int threads : {1, 2, 5}) {
    SetNumThreads(threads);
    std::vector<int> hits(103, 0);
    ParallelFor(3, 103, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) ++hits[i];
    });
    for (std::size_t i = 0; i < hits.size(); ++i) EXPECT_EQ(hits[i], i >= 3 ? 1 : 0);
  }
  SetNumThreads(saved);
}

}  // namespace
}  // namespace convfeat
