#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "aesust/errors.hpp"

namespace aesust {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

inline Index numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

/// Dense row-major tensor. Rank-4 tensors are laid out N×C×H×W.
template <typename T>
class Tensor {
 public:
  using Scalar = T;

  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(Vec<T>::Zero(numel(shape_))) {}
  Tensor(Shape shape, Vec<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != numel(shape_)) {
      throw ShapeError("tensor data size " + std::to_string(data_.size()) + " does not match shape " +
                       aesust::to_string(shape_));
    }
  }

  static Tensor constant(Shape shape, T value) {
    Tensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }

  static Tensor from_values(Shape shape, std::initializer_list<T> values) {
    Vec<T> data(static_cast<Index>(values.size()));
    Index i = 0;
    for (T v : values) data[i++] = v;
    return Tensor(std::move(shape), std::move(data));
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index i) const { return shape_[static_cast<std::size_t>(i)]; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Vec<T>& data() { return data_; }
  const Vec<T>& data() const { return data_; }
  T* raw() { return data_.data(); }
  const T* raw() const { return data_.data(); }

  T& operator[](Index i) { return data_[i]; }
  T operator[](Index i) const { return data_[i]; }

  T& operator()(Index n, Index c, Index h, Index w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  T operator()(Index n, Index c, Index h, Index w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  /// Row-major matrix view of `rows*cols` contiguous elements starting at `offset`.
  MatrixMap<T> matrix(Index rows, Index cols, Index offset = 0) {
    return MatrixMap<T>(data_.data() + offset, rows, cols);
  }
  ConstMatrixMap<T> matrix(Index rows, Index cols, Index offset = 0) const {
    return ConstMatrixMap<T>(data_.data() + offset, rows, cols);
  }

  Tensor reshaped(Shape shape) const {
    if (numel(shape) != size()) {
      throw ShapeError("cannot reshape " + aesust::to_string(shape_) + " to " + aesust::to_string(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, data_.template cast<U>());
  }

  bool all_finite() const { return data_.allFinite(); }

  void set_zero() { data_.setZero(); }

 private:
  Shape shape_;
  Vec<T> data_;
};

template <typename T>
void require_rank4(const Tensor<T>& t, const char* what) {
  if (t.rank() != 4) {
    throw ShapeError(std::string(what) + ": expected rank-4 N×C×H×W tensor, got " + to_string(t.shape()));
  }
}

}  // namespace aesust
