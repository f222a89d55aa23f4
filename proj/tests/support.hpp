#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tensorcs/tensor.hpp"

namespace testing {

using tensorcs::Index;

inline Eigen::MatrixXd gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

inline Eigen::MatrixXd unit_columns(Eigen::MatrixXd m) {
  m.colwise().normalize();
  return m;
}

inline tensorcs::Tensor random_tensor(const tensorcs::Shape& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  tensorcs::Tensor t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = g(rng);
  return t;
}

// Explicit loop-nest oracle for a single mode product.
inline tensorcs::Tensor naive_mode_product(const tensorcs::Tensor& t, const Eigen::MatrixXd& a, Index mode) {
  tensorcs::Shape out_shape = t.shape();
  out_shape[mode] = a.rows();
  tensorcs::Tensor out(out_shape);
  for (Index lin = 0; lin < out.size(); ++lin) {
    tensorcs::Shape idx = out.multi_index(lin);
    double acc = 0;
    for (Index k = 0; k < t.dim(mode); ++k) {
      tensorcs::Shape src = idx;
      src[mode] = k;
      acc += a(idx[mode], k) * t[t.linear_index(src)];
    }
    out[lin] = acc;
  }
  return out;
}

}  // namespace testing
