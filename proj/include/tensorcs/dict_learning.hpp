#pragma once

// Sensing-coupled dictionary learning.
//
// Training signals X (N_0 x ... x N_{n-1} x T) and their per-mode
// measurements are stacked into a coupled tensor Z whose mode i has
// N_i + M_i rows, and the dictionaries enter through D_i = [g I; Phi_i] Psi_i.
// The learner alternates Kronecker-OMP coding of every slice of Z with one
// sweep over the atoms of each mode. An atom update takes the rank-1
// leading term of the restricted residual, maps its mode direction back
// through the pseudo-inverse of [g I; Phi_i], normalizes it and refits the
// affected coefficient slices by least squares.
//
// With one mode (vectorized signals) the same machinery is coupled KSVD;
// with coupling disabled it is the tensor KSVD on Z = X, D_i = Psi_i.

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tensorcs/sparse.hpp"
#include "tensorcs/tensor.hpp"

namespace tensorcs {

// Bit i of a key is set when mode i has been measured. Key 0 is never
// stored: it is the signal stack itself.
using MeasurementMask = std::uint32_t;

struct TrainingSet {
  Tensor signals;  // N_0 x ... x N_{n-1} x T
  std::map<MeasurementMask, Tensor> measurements;

  Index modes() const { return signals.order() - 1; }
  Index count() const { return signals.shape().back(); }
};

// Fills measurements for every non-empty subset of modes:
// Y_S = X x_{i in S} Phi_i + E_S with i.i.d. N(0, noise_variance) entries.
void generate_measurements(TrainingSet& train, const FactorSet& phis, double noise_variance, std::mt19937_64& rng);

struct CoupledTensor {
  Tensor z;
  FactorSet stacks;  // [g I; Phi_i] per mode (I alone when uncoupled)
};

// Block tensor Z: the block where exactly the modes in S are measured holds
// g^(n - |S|) * Y_S. Missing measurement stacks are formed noiselessly.
CoupledTensor build_coupled_tensor(const TrainingSet& train, const FactorSet& phis, double gamma);

// (g^2 I + Phi^T Phi)^{-1} [g I, Phi^T]
Eigen::MatrixXd coupling_pseudo_inverse(const Eigen::MatrixXd& phi, double gamma);

struct LearnConfig {
  double gamma = 1.0 / 64;
  Index sparsity_k = 4;  // total nonzeros per training slice
  int outer_iters = 10;
  std::uint64_t seed = 0;
  bool coupled = true;
  double coder_tol = 0.0;  // residual tolerance passed to Kronecker-OMP

  void validate() const;
};

struct SliceCode {
  std::vector<Index> support;  // linear indices into the coefficient shape
  std::vector<double> values;
};

// Mutable learner state; exposed so single atom updates can be tested.
struct LearnState {
  Tensor z;          // P_0 x ... x P_{n-1} x T
  FactorSet stacks;  // P_i x N_i
  FactorSet psis;    // N_i x Nhat_i, unit-norm columns
  std::vector<SliceCode> codes;
  FactorSet ds;  // cached D_i = stacks_i * psis_i

  Index modes() const { return static_cast<Index>(psis.size()); }
  Index count() const { return z.shape().back(); }
  Shape coefficient_shape() const;
  const FactorSet& dictionaries() const { return ds; }
  void refresh_dictionaries();  // after editing psis or stacks directly
  Tensor slice(Index t) const { return last_mode_slice(z, t); }
  // ||Z_t - (S_t x_i D_i)||^2 for one slice.
  double slice_residual_sq(Index t, const FactorSet& ds) const;
  double are() const;
  SparseTensor stacked_codes() const;
};

struct AtomUpdate {
  Eigen::VectorXd atom;  // new unit-norm dictionary column
  std::vector<Index> slices;  // training slices that use the atom
  bool replaced = false;  // unused atom reseeded from the worst slice
  bool accepted = true;   // false when the candidate would raise the residual
  double residual_before = 0;  // restricted residual, squared Frobenius
  double residual_after = 0;
};

// Kronecker-OMP over every slice of state.z; returns the number of slices
// whose coder threw (those keep an empty code).
int code_all_slices(LearnState& state, Index k, double tol = 0.0);

// One atom update in `mode`. `reseed_taken` marks training slices already
// used to reseed unused atoms during the current sweep.
AtomUpdate update_atom(LearnState& state, Index mode, Index atom, std::vector<char>* reseed_taken = nullptr);
inline AtomUpdate update_atom_mode1(LearnState& state, Index atom) { return update_atom(state, 0, atom); }
inline AtomUpdate update_atom_mode2(LearnState& state, Index atom) { return update_atom(state, 1, atom); }

struct LearnDiagnostics {
  int inner_updates_per_iter = 0;
  int replaced_atoms = 0;
  int rejected_updates = 0;
  int coder_failures = 0;
};

struct LearnResult {
  FactorSet psis;
  std::vector<double> are_trace;  // measured after coding, before the sweep
  SparseTensor codes;             // final codes, N_hat_0 x ... x T
  double final_are = 0;           // with the final dictionaries and codes
  LearnDiagnostics diagnostics;
};

LearnState make_learn_state(const TrainingSet& train, const FactorSet& phis, const FactorSet& psis0,
                            const LearnConfig& cfg);

// cTKSVD (cfg.coupled) or TKSVD (!cfg.coupled) for any number of modes.
LearnResult learn(const TrainingSet& train, const FactorSet& phis, const FactorSet& psis0, const LearnConfig& cfg);

// Coupled KSVD on vectorized signals: x is N x T, phi is M x N, psi0 N x Nhat.
LearnResult learn_cksvd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& phi, const Eigen::MatrixXd& psi0,
                        const LearnConfig& cfg, const Eigen::MatrixXd* y = nullptr);

Eigen::MatrixXd normalize_columns(Eigen::MatrixXd m);

}  // namespace tensorcs
