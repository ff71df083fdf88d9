// Copyright 2026 The Hydra Authors. All Rights Reserved.
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

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "hydra/core/errors.hpp"

namespace hydra {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline Index numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1},
                         [](Index a, Index b) { return a * b; });
}

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Contiguous row-major n-d array. The last axis is the fastest varying, so
/// any array of rank >= 1 can be viewed as a (numel / last, last) matrix.
template <typename Scalar>
class DenseArray {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

  DenseArray() = default;

  explicit DenseArray(Shape shape)
      : shape_(std::move(shape)), data_(Vector::Zero(numel(shape_))) {}

  DenseArray(Shape shape, Vector data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (numel(shape_) != data_.size()) {
      throw DimensionError("array of shape " + to_string(shape_) + " given " +
                           std::to_string(data_.size()) + " values");
    }
  }

  static DenseArray constant(Shape shape, Scalar value) {
    DenseArray out(std::move(shape));
    out.data_.setConstant(value);
    return out;
  }

  static DenseArray scalar(Scalar value) { return constant({}, value); }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index axis) const {
    if (axis < 0) axis += rank();
    if (axis < 0 || axis >= rank()) {
      throw DimensionError("axis out of range for shape " + to_string(shape_));
    }
    return shape_[static_cast<std::size_t>(axis)];
  }
  Index size() const { return data_.size(); }
  bool empty() const { return shape_.empty() && data_.size() == 0; }

  Vector& values() { return data_; }
  const Vector& values() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  template <typename... Ix>
  Scalar& at(Ix... ix) {
    return data_[offset({static_cast<Index>(ix)...})];
  }
  template <typename... Ix>
  Scalar at(Ix... ix) const {
    return data_[offset({static_cast<Index>(ix)...})];
  }

  MatrixMap matrix(Index rows, Index cols) {
    check_view(rows, cols);
    return MatrixMap(data_.data(), rows, cols);
  }
  ConstMatrixMap matrix(Index rows, Index cols) const {
    check_view(rows, cols);
    return ConstMatrixMap(data_.data(), rows, cols);
  }

  /// (numel / last, last) view.
  MatrixMap rows() { return matrix(size() / std::max<Index>(last(), 1), last()); }
  ConstMatrixMap rows() const {
    return matrix(size() / std::max<Index>(last(), 1), last());
  }

  Index last() const { return shape_.empty() ? 1 : shape_.back(); }

  DenseArray reshaped(Shape shape) const {
    return DenseArray(std::move(shape), data_);
  }

  template <typename Other>
  DenseArray<Other> cast() const {
    return DenseArray<Other>(shape_, data_.template cast<Other>());
  }

  bool all_finite() const { return data_.allFinite(); }

  friend bool operator==(const DenseArray& a, const DenseArray& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Index offset(std::initializer_list<Index> ix) const {
    if (static_cast<Index>(ix.size()) != rank()) {
      throw DimensionError("index rank mismatch for shape " + to_string(shape_));
    }
    Index flat = 0;
    std::size_t axis = 0;
    for (Index i : ix) flat = flat * shape_[axis++] + i;
    return flat;
  }

  void check_view(Index rows, Index cols) const {
    if (rows * cols != data_.size()) {
      throw DimensionError("cannot view " + to_string(shape_) + " as " +
                           std::to_string(rows) + "x" + std::to_string(cols));
    }
  }

  Shape shape_;
  Vector data_;
};

using Array = DenseArray<double>;
using ArrayF = DenseArray<float>;

}  // namespace hydra
