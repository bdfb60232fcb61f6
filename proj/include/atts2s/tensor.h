// atts2s/tensor.h

// Copyright 2026  The atts2s Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ATTS2S_TENSOR_H_
#define ATTS2S_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "atts2s/errors.h"

namespace atts2s {

/// Per-row (or per-element) validity flags; 1 = valid, 0 = padding.
using Mask = std::vector<std::uint8_t>;

/// Dense row-major tensor. Rank 1 tensors behave as a single row when used
/// as a matrix, so a bias of shape {n} is a 1 x n matrix.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    values_.assign(CheckedSize(shape_), T(0));
  }

  Tensor(std::vector<int> shape, std::vector<T> values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != CheckedSize(shape_))
      throw DimensionError("value count " + std::to_string(values_.size()) +
                           " does not match shape " + ShapeString(shape_));
  }

  static Tensor Matrix(int rows, int cols) { return Tensor({rows, cols}); }
  static Tensor Scalar(T v) { return Tensor({1}, {v}); }

  const std::vector<int> &shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int k) const { return shape_.at(k); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  /// Matrix view: leading dimensions collapse into rows.
  int rows() const {
    if (shape_.empty()) return 0;
    return static_cast<int>(values_.size() / shape_.back());
  }
  int cols() const { return shape_.empty() ? 0 : shape_.back(); }

  T *data() { return values_.data(); }
  const T *data() const { return values_.data(); }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::vector<T> &storage() { return values_; }
  const std::vector<T> &storage() const { return values_; }

  T &operator[](std::size_t k) { return values_[k]; }
  const T &operator[](std::size_t k) const { return values_[k]; }
  T &operator()(int r, int c) { return values_[std::size_t(r) * cols() + c]; }
  const T &operator()(int r, int c) const {
    return values_[std::size_t(r) * cols() + c];
  }
  T *row(int r) { return values_.data() + std::size_t(r) * cols(); }
  const T *row(int r) const { return values_.data() + std::size_t(r) * cols(); }

  void Fill(T v) { values_.assign(values_.size(), v); }
  void SetZero() { Fill(T(0)); }
  bool SameShape(const Tensor &o) const { return shape_ == o.shape_; }

  template <typename U>
  Tensor<U> Cast() const {
    return Tensor<U>(shape_, std::vector<U>(values_.begin(), values_.end()));
  }

  static std::string ShapeString(const std::vector<int> &shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t k = 0; k < shape.size(); ++k) os << (k ? "x" : "") << shape[k];
    os << ']';
    return os.str();
  }
  std::string ShapeString() const { return ShapeString(shape_); }

 private:
  static std::size_t CheckedSize(const std::vector<int> &shape) {
    if (shape.empty()) throw DimensionError("tensor needs at least one dimension");
    std::size_t n = 1;
    for (int d : shape) {
      if (d <= 0)
        throw DimensionError("non-positive dimension in shape " + ShapeString(shape));
      n *= std::size_t(d);
    }
    return n;
  }

  std::vector<int> shape_;
  std::vector<T> values_;
};

}  // namespace atts2s

#endif  // ATTS2S_TENSOR_H_
