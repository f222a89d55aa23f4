#include "tensorcs/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tensorcs {

SparseTensor::SparseTensor(Shape shape, std::vector<Index> support, std::vector<double> values)
    : shape_(std::move(shape)), support_(std::move(support)), values_(std::move(values)) {
  if (support_.size() != values_.size()) throw InvalidArgument("SparseTensor: support/value length mismatch");
  const Index total = shape_size(shape_);
  std::vector<Index> sorted = support_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidArgument("SparseTensor: duplicate support index");
  if (!sorted.empty() && (sorted.front() < 0 || sorted.back() >= total))
    throw InvalidArgument("SparseTensor: support index out of range");
}

SparseTensor SparseTensor::from_dense(const Tensor& t, double threshold) {
  std::vector<Index> support;
  std::vector<double> values;
  for (Index i = 0; i < t.size(); ++i) {
    if (std::abs(t[i]) > threshold) {
      support.push_back(i);
      values.push_back(t[i]);
    }
  }
  return SparseTensor(t.shape(), std::move(support), std::move(values));
}

Shape SparseTensor::multi_index(std::size_t i) const {
  Shape idx(shape_.size());
  Index lin = support_.at(i);
  for (std::size_t m = 0; m < shape_.size(); ++m) {
    idx[m] = lin % shape_[m];
    lin /= shape_[m];
  }
  return idx;
}

Tensor SparseTensor::to_dense() const {
  Tensor t(shape_);
  for (std::size_t i = 0; i < support_.size(); ++i) t[support_[i]] = values_[i];
  return t;
}

KronOperator::KronOperator(FactorSet factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw InvalidArgument("KronOperator needs at least one factor");
}

Shape KronOperator::input_shape() const {
  Shape s;
  for (const auto& f : factors_) s.push_back(f.cols());
  return s;
}

Shape KronOperator::output_shape() const {
  Shape s;
  for (const auto& f : factors_) s.push_back(f.rows());
  return s;
}

Tensor KronOperator::apply(const Tensor& s) const {
  if (s.shape() != input_shape())
    throw InvalidArgument("KronOperator::apply: expected " + shape_string(input_shape()) + ", got " +
                          shape_string(s.shape()));
  return multi_mode_product(s, factors_);
}

Tensor KronOperator::apply(const SparseTensor& s) const {
  if (s.shape() != input_shape()) throw InvalidArgument("KronOperator::apply: sparse shape mismatch");
  Tensor y(output_shape());
  for (std::size_t i = 0; i < s.nnz(); ++i) y.data() += s.values()[i] * column(s.support()[i]);
  return y;
}

Tensor KronOperator::adjoint(const Tensor& y) const {
  if (y.shape() != output_shape())
    throw InvalidArgument("KronOperator::adjoint: expected " + shape_string(output_shape()) + ", got " +
                          shape_string(y.shape()));
  return multi_mode_product_transposed(y, factors_);
}

Eigen::VectorXd KronOperator::column(Index linear) const {
  Eigen::VectorXd col(1);
  col(0) = 1.0;
  for (const auto& f : factors_) {
    const Index j = linear % f.cols();
    linear /= f.cols();
    Eigen::VectorXd next(col.size() * f.rows());
    for (Index r = 0; r < f.rows(); ++r) next.segment(r * col.size(), col.size()) = f(r, j) * col;
    col = std::move(next);
  }
  return col;
}

Eigen::MatrixXd KronOperator::columns(const std::vector<Index>& support) const {
  Eigen::MatrixXd out(rows(), static_cast<Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) out.col(static_cast<Index>(i)) = column(support[i]);
  return out;
}

Eigen::MatrixXd KronOperator::explicit_matrix() const { return kron_all(factors_); }

double KronOperator::norm_estimate(int max_iters, double rel_tol) const {
  // Deterministic start so repeated calls agree.
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  Tensor x(input_shape());
  for (Index i = 0; i < x.size(); ++i) x[i] = gauss(rng);
  double nrm = x.norm();
  if (nrm == 0) return 0;
  x *= 1.0 / nrm;
  double sigma2 = 0;
  for (int it = 0; it < max_iters; ++it) {
    Tensor w = adjoint(apply(x));
    const double next = w.norm();
    if (next == 0) return 0;
    x = w * (1.0 / next);
    const bool done = std::abs(next - sigma2) <= rel_tol * next;
    sigma2 = next;
    if (done) break;
  }
  return std::sqrt(sigma2);
}

}  // namespace tensorcs
