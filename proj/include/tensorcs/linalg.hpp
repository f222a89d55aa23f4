#pragma once

// SVD with a fixed sign convention, numerical rank, rank-1 higher-order
// power iteration and least squares on a column subset.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "tensorcs/errors.hpp"
#include "tensorcs/tensor.hpp"

namespace tensorcs {

template <typename Scalar>
struct SvdResult {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix u;  // rows x rows
  Vector singular_values;  // min(rows, cols), non-increasing
  Matrix v;  // cols x cols

  Matrix reconstruct() const {
    const Index r = singular_values.size();
    return u.leftCols(r) * singular_values.asDiagonal() * v.leftCols(r).transpose();
  }
};

namespace detail {

// Flips `col` so its first entry of non-negligible magnitude is non-negative.
// Returns the applied sign.
template <typename Derived>
typename Derived::Scalar canonical_sign(Eigen::MatrixBase<Derived>&& col) {
  using Scalar = typename Derived::Scalar;
  const Scalar scale = col.cwiseAbs().maxCoeff();
  if (scale == Scalar(0)) return Scalar(1);
  for (Index i = 0; i < col.size(); ++i) {
    if (std::abs(col(i)) > scale * Scalar(1e-8)) {
      if (col(i) < Scalar(0)) {
        col = -col;
        return Scalar(-1);
      }
      return Scalar(1);
    }
  }
  return Scalar(1);
}

}  // namespace detail

// Full SVD. Singular vectors follow the convention that the first
// non-negligible entry of every left singular vector is non-negative.
template <typename Derived>
SvdResult<typename Derived::Scalar> svd(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (!m.allFinite()) throw NumericalFailure("svd: non-finite input");
  const Matrix a = m;
  SvdResult<Scalar> out;
  if (a.rows() == 0 || a.cols() == 0) {
    out.u = Matrix::Identity(a.rows(), a.rows());
    out.v = Matrix::Identity(a.cols(), a.cols());
    out.singular_values.resize(0);
    return out;
  }
  Eigen::BDCSVD<Matrix> solver(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (solver.info() != Eigen::Success) throw NumericalFailure("svd: did not converge");
  out.u = solver.matrixU();
  out.v = solver.matrixV();
  out.singular_values = solver.singularValues();
  const Index r = out.singular_values.size();
  for (Index i = 0; i < r; ++i) {
    const Scalar s = detail::canonical_sign(out.u.col(i));
    if (s < Scalar(0)) out.v.col(i) = -out.v.col(i);
  }
  for (Index i = r; i < out.u.cols(); ++i) detail::canonical_sign(out.u.col(i));
  for (Index i = r; i < out.v.cols(); ++i) detail::canonical_sign(out.v.col(i));
  return out;
}

// Number of singular values above rel_tol * largest.
template <typename Derived>
Index numerical_rank(const Eigen::MatrixBase<Derived>& m, double rel_tol = 1e-10) {
  using Matrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> solver(m);
  const auto& s = solver.singularValues();
  if (s.size() == 0 || s(0) == 0) return 0;
  return (s.array() > rel_tol * s(0)).count();
}

template <typename Scalar>
struct Hosvd1Result {
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> vectors;  // one unit vector per mode
  Scalar value = 0;
  bool degenerate = false;
  int sweeps = 0;
};

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> leading_eigvec_of_gram(const BasicTensor<Scalar>& t, Index mode) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Matrix u = unfold(t, mode);
  const Matrix gram = u * u.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  return es.eigenvectors().col(gram.rows() - 1);
}

}  // namespace detail

// Leading rank-1 term of t by alternating (higher-order) power iteration,
// started from the leading left singular vector of each unfolding. For an
// order-2 input this is the leading SVD triple.
template <typename Scalar>
Hosvd1Result<Scalar> hosvd_rank1(const BasicTensor<Scalar>& t, double rel_tol = 1e-10, int max_sweeps = 100) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Index n = t.order();
  if (n < 2) throw InvalidArgument("hosvd_rank1 needs a tensor of order >= 2");
  Hosvd1Result<Scalar> out;
  out.vectors.resize(static_cast<std::size_t>(n));
  if (t.size() == 0 || t.data().cwiseAbs().maxCoeff() == Scalar(0)) {
    for (Index m = 0; m < n; ++m) out.vectors[m] = Vector::Unit(t.dim(m), 0);
    out.degenerate = true;
    return out;
  }
  if (n == 2) {
    const auto s = svd(t.as_matrix());
    out.vectors[0] = s.u.col(0);
    out.vectors[1] = s.v.col(0);
    out.value = s.singular_values(0);
    return out;
  }
  for (Index m = 0; m + 1 < n; ++m) {
    out.vectors[m] = detail::leading_eigvec_of_gram(t, m);
  }
  out.vectors[n - 1] = Vector::Zero(t.dim(n - 1));
  Scalar prev = 0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    // The last mode goes first so the very first update uses only the
    // unfolding initializations.
    Scalar value = 0;
    for (Index k = 0; k < n; ++k) {
      const Index m = (k + n - 1) % n;
      Vector w = contract_all_but(t, out.vectors, m);
      value = w.norm();
      if (value == Scalar(0)) break;
      out.vectors[m] = w / value;
    }
    out.sweeps = sweep + 1;
    if (value == Scalar(0)) {
      out.degenerate = true;
      break;
    }
    const bool converged = sweep > 0 && std::abs(value - prev) <= rel_tol * value;
    prev = value;
    if (converged) break;
  }
  // Sign convention on all but the last mode; the last absorbs the sign.
  for (Index m = 0; m + 1 < n; ++m) {
    const Scalar s = detail::canonical_sign(out.vectors[m].col(0));
    if (s < Scalar(0)) out.vectors[n - 1] = -out.vectors[n - 1];
  }
  const Vector last = contract_all_but(t, out.vectors, n - 1);
  out.value = last.dot(out.vectors[n - 1]);
  if (out.value < Scalar(0)) {
    out.vectors[n - 1] = -out.vectors[n - 1];
    out.value = -out.value;
  }
  return out;
}

// min ||b * x - y|| via column-pivoted QR; falls back to ridge-regularized
// normal equations (ridge 1e-12) when b is numerically rank deficient.
template <typename DerivedB, typename DerivedY>
Eigen::Matrix<typename DerivedB::Scalar, Eigen::Dynamic, 1> least_squares(const Eigen::MatrixBase<DerivedB>& b,
                                                                          const Eigen::MatrixBase<DerivedY>& y,
                                                                          double ridge = 1e-12) {
  using Scalar = typename DerivedB::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (b.rows() != y.rows()) throw InvalidArgument("least_squares: row mismatch");
  if (b.cols() == 0) return Vector(0);
  Eigen::ColPivHouseholderQR<Matrix> qr(b);
  if (qr.rank() == b.cols()) return qr.solve(y);
  const Matrix gram = b.transpose() * b + Scalar(ridge) * Matrix::Identity(b.cols(), b.cols());
  return gram.ldlt().solve(b.transpose() * y);
}

}  // namespace tensorcs
