#pragma once

// Sparse recovery: OMP on an explicit matrix, Kronecker-OMP through factor
// matrices, and FISTA basis pursuit denoising.

#include <vector>

#include <Eigen/Dense>

#include "tensorcs/sparse.hpp"
#include "tensorcs/tensor.hpp"

namespace tensorcs {

// Greedy OMP: picks the column with the largest |correlation| (lowest index
// on ties), refits by least squares, stops after k atoms or once the
// residual 2-norm is <= tol. Returns an order-1 sparse tensor.
SparseTensor omp(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, Index k, double tol = 0.0);

// OMP against op.explicit_matrix() and vec(y), computed through mode
// products; the same selections and refits as omp().
SparseTensor kron_omp(const KronOperator& op, const Tensor& y, Index k, double tol = 0.0);

// Kronecker-OMP that selects atoms by normalized correlation, for factors
// whose columns are not unit norm. Coefficients refer to the original
// (unnormalized) factors.
SparseTensor kron_omp_normalized(const FactorSet& factors, const Tensor& y, Index k, double tol = 0.0);

struct FistaOptions {
  double lambda = 1e-3;
  int max_iters = 1000;
  double rel_tol = 1e-9;  // stop on relative iterate change
  bool restart = true;    // function-value restart keeps the objective monotone
  double threshold = 1e-8;
};

struct FistaResult {
  SparseTensor solution;
  std::vector<double> objective_trace;
  int iterations = 0;
  double lipschitz = 0;
};

// min_s 0.5 ||y - A s||^2 + lambda ||s||_1 by accelerated proximal gradient.
FistaResult fista_bpdn(const KronOperator& op, const Tensor& y, const FistaOptions& options);
inline FistaResult fista_bpdn(const KronOperator& op, const Tensor& y, double lambda, int iters) {
  FistaOptions o;
  o.lambda = lambda;
  o.max_iters = iters;
  return fista_bpdn(op, y, o);
}

double bpdn_objective(const KronOperator& op, const Tensor& y, const Tensor& s, double lambda);

// Least-squares refit of y on the support of s. Returns s unchanged when
// the support has at least as many entries as there are measurements.
SparseTensor debias(const KronOperator& op, const Tensor& y, const SparseTensor& s);

}  // namespace tensorcs
