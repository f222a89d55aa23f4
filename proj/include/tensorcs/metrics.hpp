#pragma once

// Frame-quality measures and reconstruction error metrics.

#include <cstdint>

#include <Eigen/Dense>

#include "tensorcs/sparse.hpp"
#include "tensorcs/tensor.hpp"

namespace tensorcs {

struct FrameReport {
  double mutual_coherence = 0;
  double gram_identity_deviation = 0;  // ||I - A^T A||_F^2
  double sensing_energy = 0;           // ||Phi||_F^2
  double parseval_deviation = 0;       // ||A A^T - I||_F^2
};

enum class Normalize { kColumns, kRaw };

// Largest |a_i^T a_j| over distinct columns; columns are scaled to unit
// norm first unless `raw` is requested.
double mutual_coherence(const Eigen::MatrixXd& a, Normalize mode = Normalize::kColumns);

// Restricted isometry constant of order k by exhaustive enumeration of all
// k-column submatrices.
double ric_bruteforce(const Eigen::MatrixXd& a, Index k, std::uint64_t max_subsets = 200000);

FrameReport frame_report(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& psi);

// ||I - kron_i (Psi_i^T Phi_i^T Phi_i Psi_i)||_F^2 evaluated factor-wise.
double frame_objective(const FactorSet& psis, const FactorSet& phis);
// Same quantity with the Kronecker product materialized (test reference).
double frame_objective_explicit(const FactorSet& psis, const FactorSet& phis);

double mse(const Tensor& x_true, const Tensor& x_hat);
double psnr(const Tensor& x_true, const Tensor& x_hat, double peak);
double psnr_from_mse(double mse_value, double peak);

// sqrt(||z - s x_0 D_0 x_1 D_1 ...||_F^2 / len(z)).
double are(const Tensor& z, const SparseTensor& s, const FactorSet& ds);

}  // namespace tensorcs
