#pragma once

// Sparse coefficient tensors and matrix-free Kronecker operators.

#include <vector>

#include <Eigen/Dense>

#include "tensorcs/tensor.hpp"

namespace tensorcs {

// Support (canonical linear indices) and values over a dense shape.
class SparseTensor {
 public:
  SparseTensor() = default;
  explicit SparseTensor(Shape shape) : shape_(std::move(shape)) {}
  SparseTensor(Shape shape, std::vector<Index> support, std::vector<double> values);

  // Keeps entries with |value| > threshold.
  static SparseTensor from_dense(const Tensor& t, double threshold = 0.0);

  const Shape& shape() const noexcept { return shape_; }
  const std::vector<Index>& support() const noexcept { return support_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t nnz() const noexcept { return support_.size(); }

  Shape multi_index(std::size_t i) const;
  Tensor to_dense() const;

 private:
  Shape shape_;
  std::vector<Index> support_;
  std::vector<double> values_;
};

// A = factors[n-1] kron ... kron factors[0], applied through mode products.
// The Kronecker matrix is never formed except by explicit().
class KronOperator {
 public:
  KronOperator() = default;
  explicit KronOperator(FactorSet factors);

  const FactorSet& factors() const noexcept { return factors_; }
  Index order() const noexcept { return static_cast<Index>(factors_.size()); }
  // Tensor shapes of the input (columns) and output (rows) spaces.
  Shape input_shape() const;
  Shape output_shape() const;
  Index rows() const { return shape_size(output_shape()); }
  Index cols() const { return shape_size(input_shape()); }

  Tensor apply(const Tensor& s) const;
  Tensor apply(const SparseTensor& s) const;
  Tensor adjoint(const Tensor& y) const;

  // Column `linear` of the Kronecker matrix (kron of factor columns).
  Eigen::VectorXd column(Index linear) const;
  // Columns for a support set, one per entry.
  Eigen::MatrixXd columns(const std::vector<Index>& support) const;

  Eigen::MatrixXd explicit_matrix() const;

  // Largest singular value by power iteration on A^T A.
  double norm_estimate(int max_iters = 200, double rel_tol = 1e-10) const;

 private:
  FactorSet factors_;
};

}  // namespace tensorcs
