#pragma once

// Multilinear sensing-matrix design for fixed per-mode dictionaries.
//
// Approach I (separable, closed form) makes every equivalent matrix
// A_i = Phi_i Psi_i a Parseval tight frame, which minimizes
// ||I - kron_i(A_i^T A_i)||_F^2 with minimum prod(Nhat_i) - prod(M_i).
//
// Approach II (non-separable) minimizes
//   (1 - beta) ||G_Psi - G_A||_F^2 + alpha ||Phi||_F^2 + beta ||I - G_A||_F^2
// over the Kronecker products G_Psi = kron(Psi_i^T Psi_i),
// G_A = kron(A_i^T A_i), Phi = kron(Phi_i), by cyclic gradient descent.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "tensorcs/tensor.hpp"

namespace tensorcs {

struct DesignConfig {
  double alpha = 1.0;  // sensing-energy weight
  double beta = 0.8;   // trade-off between the two Gram terms, in [0, 1]
  double eta = 1e-7;   // step size
  int max_iters = 5000;  // full cycles over all modes
  double stop_rel_tol = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DesignResult {
  FactorSet phis;               // after sqrt(N_i) Frobenius normalization
  FactorSet phis_unnormalized;  // raw optimizer output
  // Approach II: objective at the start and after every full cycle.
  // Approach I: the single closed-form objective value.
  std::vector<double> objective_trace;
  int iterations_used = 0;
  bool monotone = true;  // objective_trace never increased
};

enum class OrthonormalChoice { kIdentity, kRandom };

struct SeparableOptions {
  OrthonormalChoice choice = OrthonormalChoice::kIdentity;
  std::uint64_t seed = 0;
  double rank_tol = 1e-10;  // relative to the largest singular value
};

// Rescales each Phi_i to squared Frobenius norm N_i (its column count).
FactorSet normalize_sensing(FactorSet phis);

// Closed-form Approach I, mode by mode.
DesignResult design_separable(const FactorSet& psis, const std::vector<Index>& ms,
                              const SeparableOptions& options = {});

// Single-mode closed form: Phi with Phi Psi Psi^T Phi^T = I_m.
Eigen::MatrixXd separable_mode_solution(const Eigen::MatrixXd& psi, Index m, const Eigen::MatrixXd& left,
                                        const Eigen::MatrixXd& right, double rank_tol = 1e-10);

double approach2_objective(const FactorSet& phis, const FactorSet& psis, const DesignConfig& cfg);
// Reference evaluator that materializes every Kronecker product.
double approach2_objective_explicit(const FactorSet& phis, const FactorSet& psis, const DesignConfig& cfg);

// d f / d Phi_mode for the Approach II objective (any number of modes).
Eigen::MatrixXd approach2_gradient(const FactorSet& phis, const FactorSet& psis, const DesignConfig& cfg,
                                   Index mode);

// Approach II: Phi_i <- Phi_i - eta * grad_i, cycling over modes. Stops when
// a full cycle lowers the objective by less than stop_rel_tol (relative) or
// after max_iters cycles. Throws StepSizeFailure after 10 consecutive
// increasing cycles or on a non-finite objective.
DesignResult design_gradient(const FactorSet& psis, const FactorSet& phis0, const DesignConfig& cfg);

// Per-mode iterative Gram shrinkage toward the identity. A simplified
// stand-in for the separable Sapiro baseline; not used for any claims.
DesignResult design_sapiro_stub(const FactorSet& psis, const std::vector<Index>& ms, int iters = 30,
                                double shrink = 0.5);

}  // namespace tensorcs
