// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VESSELGCN_MATRIX_HPP
#define VESSELGCN_MATRIX_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace vesselgcn {

/// Thrown when operand shapes are incompatible.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix of doubles.
///
/// Zero-sized dimensions are allowed so that edge-free graphs can flow
/// through the same code path as ordinary graphs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(rows_, cols_));
    }
  }
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool same_shape(const Matrix& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  std::string shape() const { return shape_string(rows_, cols_); }

  static std::string shape_string(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

namespace detail {
using EigenRowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const EigenRowMajor> view(const Matrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}
inline Eigen::Map<EigenRowMajor> view(Matrix& m) {
  return {m.data().data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}
}  // namespace detail

/// out += a * b
inline void gemm_accumulate(const Matrix& a, const Matrix& b, Matrix& out) {
  detail::view(out).noalias() += detail::view(a) * detail::view(b);
}

/// out += a * transpose(b)
inline void gemm_nt_accumulate(const Matrix& a, const Matrix& b, Matrix& out) {
  detail::view(out).noalias() += detail::view(a) * detail::view(b).transpose();
}

/// out += transpose(a) * b
inline void gemm_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& out) {
  detail::view(out).noalias() += detail::view(a).transpose() * detail::view(b);
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape() + " by " + b.shape());
  }
  Matrix out(a.rows(), b.cols());
  gemm_accumulate(a, b, out);
  return out;
}

inline double max_abs_difference(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("max_abs_difference: " + a.shape() + " vs " + b.shape());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

inline bool all_finite(const Matrix& a) {
  for (double v : a.data())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace vesselgcn

#endif  // VESSELGCN_MATRIX_HPP
