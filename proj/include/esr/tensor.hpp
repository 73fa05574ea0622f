// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace esr {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

/// Raised when operand shapes are incompatible. The message names the
/// offending dimension.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when NaN/Inf shows up in values or gradients.
class NumericalFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string shape_to_string(const Shape& shape);

inline Index shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1},
                         [](Index a, Index b) { return a * b; });
}

/// Dense row-major n-dimensional array backed by an Eigen vector.
template <typename Scalar>
class Tensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowMatrix =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<RowMatrix>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix>;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape();
    data_ = Vector::Zero(shape_numel(shape_));
  }

  Tensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    if (data_.size() != shape_numel(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_to_string(shape_));
    }
  }

  Tensor(Shape shape, std::initializer_list<Scalar> values)
      : Tensor(std::move(shape), Vector(static_cast<Index>(values.size()))) {
    Index i = 0;
    for (Scalar v : values) data_[i++] = v;
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor constant(Shape shape, Scalar value) {
    Tensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }

  [[nodiscard]] bool empty() const { return shape_.empty(); }
  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] int rank() const { return static_cast<int>(shape_.size()); }
  [[nodiscard]] Index dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  [[nodiscard]] Index size() const { return data_.size(); }

  Vector& values() { return data_; }
  [[nodiscard]] const Vector& values() const { return data_; }
  Scalar* data() { return data_.data(); }
  [[nodiscard]] const Scalar* data() const { return data_.data(); }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  Scalar& at(Index n, Index c, Index h, Index w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  [[nodiscard]] Scalar at(Index n, Index c, Index h, Index w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  Scalar& at(Index r, Index c) { return data_[r * shape_[1] + c]; }
  [[nodiscard]] Scalar at(Index r, Index c) const { return data_[r * shape_[1] + c]; }

  /// Row-major matrix view over the storage; rows * cols must equal size().
  MatrixMap matrix(Index rows, Index cols) { return MatrixMap(data(), rows, cols); }
  [[nodiscard]] ConstMatrixMap matrix(Index rows, Index cols) const {
    return ConstMatrixMap(data(), rows, cols);
  }

  [[nodiscard]] Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

  [[nodiscard]] bool all_finite() const { return data_.allFinite(); }

  template <typename Other>
  [[nodiscard]] Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

 private:
  void validate_shape() const {
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (shape_[i] <= 0) {
        throw ShapeError("tensor extent " + std::to_string(i) + " must be positive, got " +
                         std::to_string(shape_[i]));
      }
    }
  }

  Shape shape_;
  Vector data_;
};

/// FNV-1a over the raw bytes of the values; used for bit-exactness probes.
template <typename Scalar>
std::uint64_t checksum(const Tensor<Scalar>& t);

inline std::uint64_t fnv1a(const void* bytes, std::size_t n,
                           std::uint64_t hash = 14695981039346656037ULL) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    hash ^= p[i];
    hash *= 1099511628211ULL;
  }
  return hash;
}

template <typename Scalar>
std::uint64_t checksum(const Tensor<Scalar>& t) {
  std::uint64_t h = fnv1a(t.shape().data(), t.shape().size() * sizeof(Index));
  return fnv1a(t.data(), static_cast<std::size_t>(t.size()) * sizeof(Scalar), h);
}

}  // namespace esr
