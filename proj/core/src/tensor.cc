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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <vector>

#include "convfeat/parallel.h"

namespace convfeat {

std::string ToString(const Shape4& s) {
  return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," +
         std::to_string(s.h) + "," + std::to_string(s.w) + ")";
}

template <typename T>
void CheckFinite(std::span<const T> values, const std::string& what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      Fail(ErrorCode::kNonFinite,
           what + " has a non-finite value at index " + std::to_string(i));
    }
  }
}

namespace {

// Register tile and cache block sizes for the packed path.
constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 16;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 96;
constexpr std::size_t kNc = 2048;

template <typename T>
struct OperandView {
  const T* data;
  std::size_t ld;
  bool transposed;
  // Element (r, c) of op(x).
  T operator()(std::size_t r, std::size_t c) const {
    return transposed ? data[c * ld + r] : data[r * ld + c];
  }
};

// Packs rows [i0, i0+mc) x cols [p0, p0+kc) of op(a) into kMr-row panels,
// column-major inside a panel, zero-padded to a multiple of kMr rows.
template <typename T>
void PackA(const OperandView<T>& a, std::size_t i0, std::size_t mc,
           std::size_t p0, std::size_t kc, T* out) {
  for (std::size_t ir = 0; ir < mc; ir += kMr) {
    const std::size_t rows = std::min(kMr, mc - ir);
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t r = 0; r < kMr; ++r) {
        *out++ = r < rows ? a(i0 + ir + r, p0 + p) : T{0};
      }
    }
  }
}

// Packs rows [p0, p0+kc) x cols [j0, j0+nc) of op(b) into kNr-column panels.
template <typename T>
void PackB(const OperandView<T>& b, std::size_t p0, std::size_t kc,
           std::size_t j0, std::size_t nc, T* out) {
  for (std::size_t jr = 0; jr < nc; jr += kNr) {
    const std::size_t cols = std::min(kNr, nc - jr);
    for (std::size_t p = 0; p < kc; ++p) {
      if (!b.transposed && cols == kNr) {
        const T* src = b.data + (p0 + p) * b.ld + j0 + jr;
        std::copy(src, src + kNr, out);
        out += kNr;
        continue;
      }
      for (std::size_t c = 0; c < kNr; ++c) {
        *out++ = c < cols ? b(p0 + p, j0 + jr + c) : T{0};
      }
    }
  }
}

// One kNr-wide row of the register tile.
template <typename T>
struct TileRow {
  typedef T type __attribute__((vector_size(kNr * sizeof(T))));
};

template <typename T>
void MicroKernel(std::size_t kc, const T* __restrict ap, const T* __restrict bp,
                 T alpha, T* c, std::size_t ldc, std::size_t rows,
                 std::size_t cols) {
  using Row = typename TileRow<T>::type;
  Row acc[kMr] = {};
  for (std::size_t p = 0; p < kc; ++p) {
    Row bv;
    std::memcpy(&bv, bp + p * kNr, sizeof(Row));
    const T* av = ap + p * kMr;
    for (std::size_t r = 0; r < kMr; ++r) acc[r] += av[r] * bv;
  }
  if (cols == kNr) {
    for (std::size_t r = 0; r < rows; ++r) {
      Row cv;
      std::memcpy(&cv, c + r * ldc, sizeof(Row));
      cv += alpha * acc[r];
      std::memcpy(c + r * ldc, &cv, sizeof(Row));
    }
    return;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    T* crow = c + r * ldc;
    for (std::size_t j = 0; j < cols; ++j) crow[j] += alpha * acc[r][j];
  }
}

template <typename T>
void PackedGemm(const OperandView<T>& a, const OperandView<T>& b,
                std::size_t m, std::size_t n, std::size_t k, T alpha, T* c,
                std::size_t ldc) {
  std::vector<T> bpack(((std::min(kNc, n) + kNr - 1) / kNr) * kNr * kKc);
  for (std::size_t j0 = 0; j0 < n; j0 += kNc) {
    const std::size_t nc = std::min(kNc, n - j0);
    for (std::size_t p0 = 0; p0 < k; p0 += kKc) {
      const std::size_t kc = std::min(kKc, k - p0);
      PackB(b, p0, kc, j0, nc, bpack.data());
      const std::size_t row_blocks = (m + kMc - 1) / kMc;
      ParallelFor(0, row_blocks, [&](std::size_t lo, std::size_t hi) {
        std::vector<T> apack(kMc * kKc);
        for (std::size_t blk = lo; blk < hi; ++blk) {
          const std::size_t i0 = blk * kMc;
          const std::size_t mc = std::min(kMc, m - i0);
          PackA(a, i0, mc, p0, kc, apack.data());
          for (std::size_t jr = 0; jr < nc; jr += kNr) {
            const std::size_t cols = std::min(kNr, nc - jr);
            const T* bp = bpack.data() + (jr / kNr) * kNr * kc;
            for (std::size_t ir = 0; ir < mc; ir += kMr) {
              const std::size_t rows = std::min(kMr, mc - ir);
              const T* ap = apack.data() + (ir / kMr) * kMr * kc;
              MicroKernel(kc, ap, bp, alpha, c + (i0 + ir) * ldc + j0 + jr,
                          ldc, rows, cols);
            }
          }
        }
      });
    }
  }
}

constexpr std::size_t kLanes = 16;

// Dot product with a fixed lane-strided accumulation order.
template <typename T>
T Dot(const T* __restrict x, const T* __restrict y, std::size_t k) {
  T acc[kLanes] = {};
  std::size_t p = 0;
  for (; p + kLanes <= k; p += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += x[p + l] * y[p + l];
  }
  for (std::size_t l = 0; p < k; ++p, ++l) acc[l] += x[p] * y[p];
  for (std::size_t width = kLanes / 2; width > 0; width /= 2) {
    for (std::size_t l = 0; l < width; ++l) acc[l] += acc[l + width];
  }
  return acc[0];
}

// op(b) = b^T with b stored n x k: each output is a row-row dot product.
// Each row of b is read once and reused across all rows of a.
template <typename T>
void DotGemm(const T* a, std::size_t lda, const T* b, std::size_t ldb,
             std::size_t m, std::size_t n, std::size_t k, T alpha, T* c,
             std::size_t ldc) {
  ParallelFor(0, n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) {
      const T* brow = b + j * ldb;
      for (std::size_t i = 0; i < m; ++i) {
        c[i * ldc + j] += alpha * Dot(a + i * lda, brow, k);
      }
    }
  });
}

}  // namespace

template <typename T>
void GemmStrided(Transpose trans_a, Transpose trans_b, std::size_t m,
                 std::size_t n, std::size_t k, T alpha, const T* a,
                 std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
                 std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* row = c + i * ldc;
    if (beta == T{0}) {
      std::fill(row, row + n, T{0});
    } else if (beta != T{1}) {
      for (std::size_t j = 0; j < n; ++j) row[j] *= beta;
    }
  }
  if (m == 0 || n == 0 || k == 0 || alpha == T{0}) return;
  if (trans_a == Transpose::kNo && trans_b == Transpose::kYes) {
    DotGemm(a, lda, b, ldb, m, n, k, alpha, c, ldc);
    return;
  }
  OperandView<T> av{a, lda, trans_a == Transpose::kYes};
  OperandView<T> bv{b, ldb, trans_b == Transpose::kYes};
  PackedGemm(av, bv, m, n, k, alpha, c, ldc);
}

template <typename T>
void gemm(const BasicMatrix<T>& a, const BasicMatrix<T>& b, Transpose trans_a,
          Transpose trans_b, T alpha, T beta, BasicMatrix<T>& c) {
  const bool ta = trans_a == Transpose::kYes;
  const bool tb = trans_b == Transpose::kYes;
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t k = ta ? a.rows() : a.cols();
  const std::size_t kb = tb ? b.cols() : b.rows();
  const std::size_t n = tb ? b.rows() : b.cols();
  if (k != kb) {
    Fail(ErrorCode::kDimensionMismatch,
         "gemm inner dimensions differ: " + std::to_string(k) + " vs " +
             std::to_string(kb));
  }
  if (c.rows() != m || c.cols() != n) {
    Fail(ErrorCode::kDimensionMismatch,
         "gemm output is " + std::to_string(c.rows()) + "x" +
             std::to_string(c.cols()) + ", expected " + std::to_string(m) +
             "x" + std::to_string(n));
  }
  GemmStrided(trans_a, trans_b, m, n, k, alpha, a.data().data(), a.cols(),
              b.data().data(), b.cols(), beta, c.data().data(), c.cols());
}

template void CheckFinite<float>(std::span<const float>, const std::string&);
template void CheckFinite<double>(std::span<const double>, const std::string&);
template void GemmStrided<float>(Transpose, Transpose, std::size_t,
                                 std::size_t, std::size_t, float, const float*,
                                 std::size_t, const float*, std::size_t, float,
                                 float*, std::size_t);
template void GemmStrided<double>(Transpose, Transpose, std::size_t,
                                  std::size_t, std::size_t, double,
                                  const double*, std::size_t, const double*,
                                  std::size_t, double, double*, std::size_t);
template void gemm<float>(const Matrix&, const Matrix&, Transpose, Transpose,
                          float, float, Matrix&);
template void gemm<double>(const MatrixD&, const MatrixD&, Transpose,
                           Transpose, double, double, MatrixD&);

}  // namespace convfeat
