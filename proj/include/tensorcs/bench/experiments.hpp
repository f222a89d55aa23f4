#pragma once

// Experiment drivers: sensing-design trials, dictionary-learning trials, the
// joint design/learning pipeline, and parameter sweeps written as CSV.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tensorcs/bench/config.hpp"
#include "tensorcs/bench/images.hpp"
#include "tensorcs/bench/synthetic.hpp"
#include "tensorcs/dict_learning.hpp"
#include "tensorcs/sensing_design.hpp"

namespace tensorcs::bench {

// Seed for trial `trial` of a sweep. Every grid point uses the same trial
// seeds (and the same setup seed), so grid points are compared on common
// random draws.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial);

struct TrialOutcome {
  double mse = 0;
  double psnr = 0;
  double final_are = 0;  // learning experiments only
  int iterations = 0;    // design cycles, learning iterations or joint iterations
  std::vector<double> trace;  // objective, ARE or PSNR trace
  std::string status = "ok";
};

// Sensing matrices for `design` (gaussian | approach1 | approach2 |
// separable-sapiro-stub). `phis0` seeds Approach II and is returned as is
// for gaussian.
DesignResult run_design(const std::string& design, const FactorSet& psis, const FactorSet& phis0,
                        const ExperimentConfig& cfg);

// Fixed dictionaries and designed sensing matrices shared by all trials of
// one grid point of the design experiment.
struct DesignContext {
  FactorSet psis;
  FactorSet phis;
  DesignResult design;
};
DesignContext make_design_context(const ExperimentConfig& cfg, std::uint64_t seed);
TrialOutcome design_trial(const ExperimentConfig& cfg, const DesignContext& ctx, std::uint64_t seed);

// Sparse recovery of every slice of y (last mode = samples) through the
// equivalent factors a_i = Phi_i Psi_i; returns the coefficient stack.
SparseTensor recover_stack(const FactorSet& a, const Tensor& y, const ExperimentConfig& cfg);

TrialOutcome learn_trial(const ExperimentConfig& cfg, std::uint64_t seed);

struct JointResult {
  FactorSet phis;
  FactorSet psis;
  std::vector<double> psnr_trace;  // validation PSNR after each iteration
  std::vector<double> are_trace;   // learner ARE after each iteration
  int iterations = 0;
};

// Alternates sensing design (for fixed dictionaries) and one coupled
// learning pass (coding plus an atom sweep) until the validation PSNR moves
// by less than cfg.joint.tol_db or cfg.joint.max_iters is reached.
JointResult joint_optimize(const Tensor& train, const Tensor& validation, const FactorSet& phis0,
                           const FactorSet& psis0, const ExperimentConfig& cfg);

// PSNR (peak 1) of reconstructing `x` from noiseless or noisy measurements.
double patch_psnr(const Tensor& x, const FactorSet& phis, const FactorSet& psis, const ExperimentConfig& cfg,
                  double sigma2, std::uint64_t seed);

struct PatchData {
  std::vector<GrayImage> train_images;
  std::vector<GrayImage> test_images;
};
PatchData load_patch_images(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream& warnings);
TrialOutcome joint_trial(const ExperimentConfig& cfg, const PatchData& data, std::uint64_t seed);

struct SweepOptions {
  unsigned threads = 0;  // 0: TENSORCS_THREADS or hardware concurrency
  bool wall_time = true;  // false writes 0 in the wall-time column
  std::ostream* log = nullptr;
};

// One CSV row per (grid point, trial), then one aggregate row per grid point
// (means in the metric columns, standard errors in the *_stderr columns,
// trial = number of successful trials). Columns: kind, grid, trial, seed,
// <swept keys...>, status, mse, psnr, final_are, iterations, mse_stderr,
// psnr_stderr, final_are_stderr, iterations_stderr, trace, wall_ms.
void run_sweep(const ExperimentConfig& cfg, std::ostream& csv, const SweepOptions& options = {});

unsigned thread_budget();

}  // namespace tensorcs::bench
