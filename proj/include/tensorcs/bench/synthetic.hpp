#pragma once

// Synthetic data: Gaussian dictionaries and sensing matrices, K-sparse
// coefficient stacks and noisy measurements.

#include <random>
#include <string>

#include <Eigen/Dense>

#include "tensorcs/sparse.hpp"
#include "tensorcs/tensor.hpp"

namespace tensorcs::bench {

using Rng = std::mt19937_64;

enum class SupportPattern {
  kRandom,   // K positions uniformly among all prod(Nhat_i) entries
  kProduct,  // a K_0 x K_1 x ... grid of random per-mode indices
};

SupportPattern parse_support_pattern(const std::string& name);

Eigen::MatrixXd gaussian_matrix(Index rows, Index cols, Rng& rng);
// Gaussian with unit-norm columns.
Eigen::MatrixXd gaussian_dictionary(Index rows, Index cols, Rng& rng);
// Gaussian scaled so that ||Phi||_F^2 = cols.
Eigen::MatrixXd gaussian_sensing(Index rows, Index cols, Rng& rng);

// Per-mode sparsity for a product pattern: K must be a perfect n-th power.
std::vector<Index> product_sparsity(Index k, Index modes);

// Coefficient stack Nhat_0 x ... x T with exactly k nonzero N(0,1) entries
// per slice.
SparseTensor sparse_coefficients(const Shape& coef_shape, Index count, Index k, SupportPattern pattern, Rng& rng);

// X = S x_0 Psi_0 x_1 Psi_1 ... applied slice-wise (the last mode is T).
Tensor synthesize(const SparseTensor& s, const FactorSet& psis);

// Measures every slice: Y = X x_i Phi_i + E, E ~ N(0, sigma2).
Tensor measure(const Tensor& x, const FactorSet& phis, double sigma2, Rng& rng);

void add_noise(Tensor& t, double sigma2, Rng& rng);

}  // namespace tensorcs::bench
