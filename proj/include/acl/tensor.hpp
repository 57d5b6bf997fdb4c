#pragma once

#include <cstddef>
#include <vector>

#include "acl/common.hpp"

namespace acl {

// Dense tensor of rank 0, 1 or 2 backed by an Eigen matrix; values are always
// 64-bit floats. Matrices serialize row-major.
class Tensor {
 public:
  Tensor() : value_(Matrix::Zero(1, 1)), rank_(0) {}

  static Tensor scalar(double v) {
    Tensor t;
    t.value_(0, 0) = v;
    t.rank_ = 0;
    return t;
  }
  static Tensor vector(Vector v) {
    Tensor t;
    t.value_ = std::move(v);
    t.rank_ = 1;
    return t;
  }
  static Tensor matrix(Matrix m) {
    Tensor t;
    t.value_ = std::move(m);
    t.rank_ = 2;
    return t;
  }
  static Tensor zeros_like(const Tensor& other) {
    Tensor t;
    t.value_ = Matrix::Zero(other.value_.rows(), other.value_.cols());
    t.rank_ = other.rank_;
    return t;
  }

  int rank() const { return rank_; }
  bool is_scalar() const { return rank_ == 0; }
  bool is_vector() const { return rank_ == 1; }
  bool is_matrix() const { return rank_ == 2; }

  std::vector<std::size_t> shape() const {
    if (rank_ == 0) return {};
    if (rank_ == 1) return {static_cast<std::size_t>(value_.rows())};
    return {static_cast<std::size_t>(value_.rows()), static_cast<std::size_t>(value_.cols())};
  }
  std::size_t size() const { return static_cast<std::size_t>(value_.size()); }

  double scalar_value() const {
    require(rank_ == 0, "Tensor: not a scalar");
    return value_(0, 0);
  }
  Vector vec() const {
    require(rank_ == 1, "Tensor: not a vector");
    return value_.col(0);
  }
  const Matrix& mat() const { return value_; }
  Matrix& mat() { return value_; }

  // Flat row-major view used by serialization.
  std::vector<double> row_major() const {
    std::vector<double> out;
    out.reserve(size());
    for (Eigen::Index i = 0; i < value_.rows(); ++i)
      for (Eigen::Index j = 0; j < value_.cols(); ++j) out.push_back(value_(i, j));
    return out;
  }

 private:
  Matrix value_;
  int rank_;
};

}  // namespace acl
