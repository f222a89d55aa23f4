#pragma once

// Dense n-way tensors and mode-wise algebra.
//
// Storage order: the mode-0 index varies fastest (column-major generalized
// to n modes). Under this order vec(S x_0 A_0 x_1 A_1 ... ) equals
// (A_{n-1} kron ... kron A_0) vec(S), so Kronecker operators can be built
// by folding factor products without any index permutation.
//
// Modes are 0-based throughout the C++ API.

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tensorcs/errors.hpp"

namespace tensorcs {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

template <typename Scalar>
class BasicTensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape) : shape_(std::move(shape)) {
    check_shape();
    data_ = Vector::Zero(shape_size(shape_));
  }

  BasicTensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape();
    if (data_.size() != shape_size(shape_))
      throw InvalidArgument("tensor data length " + std::to_string(data_.size()) +
                            " does not match shape " + shape_string(shape_));
  }

  // Matrix viewed as an order-2 tensor.
  template <typename Derived>
  static BasicTensor from_matrix(const Eigen::MatrixBase<Derived>& m) {
    Matrix tmp = m;
    return BasicTensor({tmp.rows(), tmp.cols()}, Eigen::Map<const Vector>(tmp.data(), tmp.size()));
  }

  static BasicTensor Zero(Shape shape) { return BasicTensor(std::move(shape)); }

  const Shape& shape() const noexcept { return shape_; }
  Index order() const noexcept { return static_cast<Index>(shape_.size()); }
  Index dim(Index mode) const { return shape_.at(static_cast<std::size_t>(mode)); }
  Index size() const noexcept { return data_.size(); }

  const Vector& data() const noexcept { return data_; }
  Vector& data() noexcept { return data_; }

  Scalar operator[](Index linear) const { return data_[linear]; }
  Scalar& operator[](Index linear) { return data_[linear]; }

  Index linear_index(std::span<const Index> idx) const {
    if (static_cast<Index>(idx.size()) != order())
      throw InvalidArgument("index arity does not match tensor order");
    Index lin = 0;
    Index stride = 1;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] < 0 || idx[i] >= shape_[i]) throw InvalidArgument("tensor index out of range");
      lin += idx[i] * stride;
      stride *= shape_[i];
    }
    return lin;
  }

  Shape multi_index(Index linear) const {
    Shape idx(shape_.size());
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      idx[i] = linear % shape_[i];
      linear /= shape_[i];
    }
    return idx;
  }

  Scalar operator()(std::initializer_list<Index> idx) const {
    return data_[linear_index(std::span<const Index>(idx.begin(), idx.size()))];
  }
  Scalar& operator()(std::initializer_list<Index> idx) {
    return data_[linear_index(std::span<const Index>(idx.begin(), idx.size()))];
  }

  // Order-2 tensor as a matrix (rows = dim 0).
  Matrix as_matrix() const {
    if (order() != 2) throw InvalidArgument("as_matrix requires an order-2 tensor");
    return Eigen::Map<const Matrix>(data_.data(), shape_[0], shape_[1]);
  }

  Scalar squared_norm() const { return data_.squaredNorm(); }
  Scalar norm() const { return data_.norm(); }

  BasicTensor& operator+=(const BasicTensor& o) {
    require_same_shape(o);
    data_ += o.data_;
    return *this;
  }
  BasicTensor& operator-=(const BasicTensor& o) {
    require_same_shape(o);
    data_ -= o.data_;
    return *this;
  }
  BasicTensor& operator*=(Scalar s) {
    data_ *= s;
    return *this;
  }

  friend BasicTensor operator+(BasicTensor a, const BasicTensor& b) { return a += b; }
  friend BasicTensor operator-(BasicTensor a, const BasicTensor& b) { return a -= b; }
  friend BasicTensor operator*(BasicTensor a, Scalar s) { return a *= s; }
  friend BasicTensor operator*(Scalar s, BasicTensor a) { return a *= s; }

  bool operator==(const BasicTensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

 private:
  void check_shape() const {
    for (Index d : shape_)
      if (d < 0) throw InvalidArgument("tensor dimensions must be non-negative");
  }
  void require_same_shape(const BasicTensor& o) const {
    if (shape_ != o.shape_)
      throw InvalidArgument("shape mismatch " + shape_string(shape_) + " vs " + shape_string(o.shape_));
  }

  Shape shape_;
  Vector data_;
};

using Tensor = BasicTensor<double>;
using FactorSet = std::vector<Eigen::MatrixXd>;

namespace detail {

inline void check_mode(Index order, Index mode) {
  if (mode < 0 || mode >= order)
    throw InvalidArgument("mode " + std::to_string(mode) + " out of range for order " +
                          std::to_string(order));
}

// Splits a shape around `mode`: product of dims before, the dim, product after.
inline std::tuple<Index, Index, Index> split_around(const Shape& shape, Index mode) {
  Index left = 1, right = 1;
  for (Index i = 0; i < mode; ++i) left *= shape[i];
  for (Index i = mode + 1; i < static_cast<Index>(shape.size()); ++i) right *= shape[i];
  return {left, shape[mode], right};
}

}  // namespace detail

// Mode-`mode` unfolding: dim(mode) rows, one column per mode fiber, columns in
// canonical order of the remaining indices.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> unfold(const BasicTensor<Scalar>& t, Index mode) {
  detail::check_mode(t.order(), mode);
  const auto [left, n, right] = detail::split_around(t.shape(), mode);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(n, left * right);
  const Scalar* src = t.data().data();
  for (Index r = 0; r < right; ++r)
    for (Index i = 0; i < n; ++i)
      for (Index l = 0; l < left; ++l) out(i, l + left * r) = src[l + left * (i + n * r)];
  return out;
}

// Inverse of unfold for a target shape.
template <typename Derived>
BasicTensor<typename Derived::Scalar> fold(const Eigen::MatrixBase<Derived>& m, Index mode, const Shape& shape) {
  using Scalar = typename Derived::Scalar;
  detail::check_mode(static_cast<Index>(shape.size()), mode);
  const auto [left, n, right] = detail::split_around(shape, mode);
  if (m.rows() != n || m.cols() != left * right)
    throw InvalidArgument("fold: matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                          ", shape " + shape_string(shape) + " needs " + std::to_string(n) + "x" +
                          std::to_string(left * right));
  BasicTensor<Scalar> t(shape);
  Scalar* dst = t.data().data();
  for (Index r = 0; r < right; ++r)
    for (Index i = 0; i < n; ++i)
      for (Index l = 0; l < left; ++l) dst[l + left * (i + n * r)] = m(i, l + left * r);
  return t;
}

// t x_mode m: every mode fiber is multiplied by m.
template <typename Scalar, typename Derived>
BasicTensor<Scalar> mode_product(const BasicTensor<Scalar>& t, const Eigen::MatrixBase<Derived>& m, Index mode) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Stride = Eigen::OuterStride<>;
  detail::check_mode(t.order(), mode);
  const auto [left, n, right] = detail::split_around(t.shape(), mode);
  if (m.cols() != n)
    throw InvalidArgument("mode_product: matrix has " + std::to_string(m.cols()) + " columns, mode " +
                          std::to_string(mode) + " has dimension " + std::to_string(n));
  const Matrix mm = m;
  Shape out_shape = t.shape();
  out_shape[mode] = mm.rows();
  BasicTensor<Scalar> out(out_shape);
  const Index j = mm.rows();
  if (left == 1) {
    // Leading mode: the data is already the n x right unfolding.
    Eigen::Map<const Matrix> src(t.data().data(), n, right);
    Eigen::Map<Matrix> dst(out.data().data(), j, right);
    dst.noalias() = mm * src;
    return out;
  }
  for (Index r = 0; r < right; ++r) {
    Eigen::Map<const Matrix, 0, Stride> src(t.data().data() + r * left * n, left, n, Stride(left));
    Eigen::Map<Matrix, 0, Stride> dst(out.data().data() + r * left * j, left, j, Stride(left));
    dst.noalias() = src * mm.transpose();
  }
  return out;
}

// Applies factors[i] along mode i for every non-empty factor. Zero-size
// factors are treated as "leave this mode alone".
template <typename Scalar>
BasicTensor<Scalar> multi_mode_product(BasicTensor<Scalar> t, const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& factors) {
  if (static_cast<Index>(factors.size()) > t.order())
    throw InvalidArgument("more factors than tensor modes");
  for (std::size_t i = 0; i < factors.size(); ++i)
    if (factors[i].size() > 0) t = mode_product(t, factors[i], static_cast<Index>(i));
  return t;
}

// Same as multi_mode_product with every factor transposed.
template <typename Scalar>
BasicTensor<Scalar> multi_mode_product_transposed(BasicTensor<Scalar> t, const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& factors) {
  if (static_cast<Index>(factors.size()) > t.order())
    throw InvalidArgument("more factors than tensor modes");
  for (std::size_t i = 0; i < factors.size(); ++i)
    if (factors[i].size() > 0) t = mode_product(t, factors[i].transpose(), static_cast<Index>(i));
  return t;
}

template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> kron(const Eigen::MatrixBase<DerivedA>& a,
                                                                             const Eigen::MatrixBase<DerivedB>& b) {
  Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                                              a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// factors[n-1] kron ... kron factors[0]; the matrix acting on vec(t) for
// multi_mode_product(t, factors).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> kron_all(const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& factors) {
  if (factors.empty()) throw InvalidArgument("kron_all needs at least one factor");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) out = kron(factors[i], out);
  return out;
}

// v_0 o v_1 o ... (mode-0 index fastest).
template <typename Scalar>
BasicTensor<Scalar> outer(const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& vectors) {
  Shape shape;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> data(1);
  data(0) = Scalar(1);
  for (const auto& v : vectors) {
    shape.push_back(v.size());
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> next(data.size() * v.size());
    for (Index j = 0; j < v.size(); ++j) next.segment(j * data.size(), data.size()) = v(j) * data;
    data = std::move(next);
  }
  return BasicTensor<Scalar>(shape, data);
}

// Contracts every mode except `keep` against the given unit vectors.
// vectors[keep] is ignored. Result has length dim(keep).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> contract_all_but(const BasicTensor<Scalar>& t,
                                                          const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& vectors,
                                                          Index keep) {
  BasicTensor<Scalar> cur = t;
  for (Index m = t.order() - 1; m >= 0; --m) {
    if (m == keep) continue;
    cur = mode_product(cur, vectors[m].transpose(), m);
  }
  return cur.data();
}

// Stacks tensors with identical leading dims along a new trailing mode.
template <typename Scalar>
BasicTensor<Scalar> stack(const std::vector<BasicTensor<Scalar>>& slices) {
  if (slices.empty()) throw InvalidArgument("stack needs at least one slice");
  Shape shape = slices.front().shape();
  const Index len = slices.front().size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> data(len * static_cast<Index>(slices.size()));
  for (std::size_t t = 0; t < slices.size(); ++t) {
    if (slices[t].shape() != shape) throw InvalidArgument("stack: slice shapes differ");
    data.segment(static_cast<Index>(t) * len, len) = slices[t].data();
  }
  shape.push_back(static_cast<Index>(slices.size()));
  return BasicTensor<Scalar>(shape, data);
}

// Slice `index` along the last mode (drops that mode).
template <typename Scalar>
BasicTensor<Scalar> last_mode_slice(const BasicTensor<Scalar>& t, Index index) {
  if (t.order() < 2) throw InvalidArgument("last_mode_slice needs order >= 2");
  Shape shape(t.shape().begin(), t.shape().end() - 1);
  const Index len = shape_size(shape);
  if (index < 0 || index >= t.shape().back()) throw InvalidArgument("slice index out of range");
  return BasicTensor<Scalar>(shape, t.data().segment(index * len, len));
}

// Concatenates two tensors along `mode`; all other dims must agree.
template <typename Scalar>
BasicTensor<Scalar> concatenate(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b, Index mode) {
  detail::check_mode(a.order(), mode);
  if (a.order() != b.order()) throw InvalidArgument("concatenate: order mismatch");
  for (Index i = 0; i < a.order(); ++i)
    if (i != mode && a.dim(i) != b.dim(i)) throw InvalidArgument("concatenate: shape mismatch");
  const auto ua = unfold(a, mode);
  const auto ub = unfold(b, mode);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> u(ua.rows() + ub.rows(), ua.cols());
  u << ua, ub;
  Shape shape = a.shape();
  shape[mode] += b.dim(mode);
  return fold(u, mode, shape);
}

}  // namespace tensorcs
