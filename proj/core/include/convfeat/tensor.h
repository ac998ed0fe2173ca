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

#ifndef CONVFEAT_TENSOR_H_
#define CONVFEAT_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "convfeat/error.h"

namespace convfeat {

// (batch, channels, height, width); w varies fastest in memory.
struct Shape4 {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t size() const { return n * c * h * w; }
  std::size_t sample_size() const { return c * h * w; }
  bool operator==(const Shape4&) const = default;
};

std::string ToString(const Shape4& s);

template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape4 shape, T fill = T{0})
      : shape_(shape), data_(shape.size(), fill) {}
  BasicTensor(Shape4 shape, std::vector<T> data)
      : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      Fail(ErrorCode::kDimensionMismatch,
           "tensor data length " + std::to_string(data_.size()) +
               " does not match shape " + ToString(shape_));
    }
  }

  const Shape4& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  const std::vector<T>& vector() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t offset(std::size_t n, std::size_t c, std::size_t h,
                     std::size_t w) const {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[offset(n, c, h, w)];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h,
              std::size_t w) const {
    return data_[offset(n, c, h, w)];
  }

  std::span<T> sample(std::size_t n) {
    return std::span<T>(data_).subspan(n * shape_.sample_size(),
                                       shape_.sample_size());
  }
  std::span<const T> sample(std::size_t n) const {
    return std::span<const T>(data_).subspan(n * shape_.sample_size(),
                                             shape_.sample_size());
  }

  // Same buffer, new shape. Element order is unchanged.
  void reshape(Shape4 new_shape) {
    if (new_shape.size() != shape_.size()) {
      Fail(ErrorCode::kDimensionMismatch,
           "cannot reshape " + ToString(shape_) + " to " +
               ToString(new_shape));
    }
    shape_ = new_shape;
  }

  bool operator==(const BasicTensor&) const = default;

 private:
  Shape4 shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
// Double-precision shadow used by gradient checks.
using TensorD = BasicTensor<double>;

template <typename T>
BasicTensor<T> reshape_view(const BasicTensor<T>& t, Shape4 new_shape) {
  BasicTensor<T> out = t;
  out.reshape(new_shape);
  return out;
}

template <typename T>
BasicTensor<T> reshape_view(BasicTensor<T>&& t, Shape4 new_shape) {
  t.reshape(new_shape);
  return std::move(t);
}

// Throws NonFinite if any element is NaN or infinite.
template <typename T>
void CheckFinite(std::span<const T> values, const std::string& what);

template <typename T>
BasicTensor<double> ToDouble(const BasicTensor<T>& t) {
  std::vector<double> d(t.data().begin(), t.data().end());
  return BasicTensor<double>(t.shape(), std::move(d));
}

template <typename T>
class BasicMatrix {
 public:
  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      Fail(ErrorCode::kDimensionMismatch,
           "matrix data length " + std::to_string(data_.size()) +
               " does not match " + std::to_string(rows_) + "x" +
               std::to_string(cols_));
    }
  }

  static BasicMatrix Identity(std::size_t n) {
    BasicMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) {
    return std::span<T>(data_).subspan(r * cols_, cols_);
  }
  std::span<const T> row(std::size_t r) const {
    return std::span<const T>(data_).subspan(r * cols_, cols_);
  }

  bool operator==(const BasicMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<float>;
using MatrixD = BasicMatrix<double>;

enum class Transpose { kNo, kYes };

// c <- alpha * op(a) * op(b) + beta * c.
//
// Each output element is reduced in a fixed order that depends only on the
// shapes. Parallel runs split output rows or columns, never k, so results are
// bitwise identical for any thread count.
template <typename T>
void gemm(const BasicMatrix<T>& a, const BasicMatrix<T>& b, Transpose trans_a,
          Transpose trans_b, T alpha, T beta, BasicMatrix<T>& c);

// Raw strided form used by the layer kernels. op(a) is m x k, op(b) is k x n,
// c is m x n, all row-major with the given leading dimensions.
template <typename T>
void GemmStrided(Transpose trans_a, Transpose trans_b, std::size_t m,
                 std::size_t n, std::size_t k, T alpha, const T* a,
                 std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
                 std::size_t ldc);

}  // namespace convfeat

#endif  // CONVFEAT_TENSOR_H_
