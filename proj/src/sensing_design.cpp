#include "tensorcs/sensing_design.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "tensorcs/errors.hpp"
#include "tensorcs/linalg.hpp"
#include "tensorcs/metrics.hpp"

namespace tensorcs {

namespace {

void check_pairs(const FactorSet& phis, const FactorSet& psis) {
  if (phis.size() != psis.size() || psis.empty())
    throw InvalidArgument("need one sensing matrix per dictionary");
  for (std::size_t i = 0; i < psis.size(); ++i)
    if (phis[i].cols() != psis[i].rows())
      throw InvalidArgument("mode " + std::to_string(i) + ": Phi is " + std::to_string(phis[i].rows()) + "x" +
                            std::to_string(phis[i].cols()) + ", Psi is " + std::to_string(psis[i].rows()) + "x" +
                            std::to_string(psis[i].cols()));
}

Eigen::MatrixXd random_orthonormal(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd g(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  return q;
}

// Per-mode scalars entering the objective and gradient.
struct ModeTerms {
  double psi_gram_sq;   // ||Psi^T Psi||_F^2
  double cross;         // <Psi^T Psi, A^T A> = ||Psi A^T||_F^2
  double a_gram_sq;     // ||A^T A||_F^2
  double a_sq;          // ||A||_F^2 = tr(A^T A)
  double phi_sq;        // ||Phi||_F^2
  double dim;           // Nhat
};

ModeTerms mode_terms(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& psi) {
  const Eigen::MatrixXd a = phi * psi;
  ModeTerms t;
  t.psi_gram_sq = (psi * psi.transpose()).squaredNorm();
  t.cross = (psi * a.transpose()).squaredNorm();
  t.a_gram_sq = (a * a.transpose()).squaredNorm();
  t.a_sq = a.squaredNorm();
  t.phi_sq = phi.squaredNorm();
  t.dim = static_cast<double>(psi.cols());
  return t;
}

}  // namespace

void DesignConfig::validate() const {
  if (!(alpha >= 0)) throw InvalidArgument("alpha must be >= 0");
  if (!(beta >= 0 && beta <= 1)) throw InvalidArgument("beta must lie in [0, 1]");
  if (!(eta > 0)) throw InvalidArgument("eta must be > 0");
  if (max_iters < 0) throw InvalidArgument("max_iters must be >= 0");
  if (!(stop_rel_tol > 0)) throw InvalidArgument("stop_rel_tol must be > 0");
}

FactorSet normalize_sensing(FactorSet phis) {
  for (auto& phi : phis) {
    const double n = phi.norm();
    if (n == 0) throw NumericalFailure("cannot normalize an all-zero sensing matrix");
    phi *= std::sqrt(static_cast<double>(phi.cols())) / n;
  }
  return phis;
}

Eigen::MatrixXd separable_mode_solution(const Eigen::MatrixXd& psi, Index m, const Eigen::MatrixXd& left,
                                        const Eigen::MatrixXd& right, double rank_tol) {
  const auto s = svd(psi);
  const Index rank = s.singular_values.size() == 0
                         ? 0
                         : (s.singular_values.array() > rank_tol * s.singular_values(0)).count();
  if (m > rank)
    throw InvalidArgument("requested " + std::to_string(m) + " measurements but the dictionary has rank " +
                          std::to_string(rank));
  if (left.rows() != m || left.cols() != m) throw InvalidArgument("left orthonormal factor must be m x m");
  if (right.rows() != rank || right.cols() != rank)
    throw InvalidArgument("right orthonormal factor must be rank x rank");
  // U [I_m 0] [V^T Lambda^{-1} 0; 0 0] U_Psi^T
  const Eigen::VectorXd inv = s.singular_values.head(rank).cwiseInverse();
  return left * right.transpose().topRows(m) * inv.asDiagonal() * s.u.leftCols(rank).transpose();
}

DesignResult design_separable(const FactorSet& psis, const std::vector<Index>& ms, const SeparableOptions& options) {
  if (psis.size() != ms.size() || psis.empty()) throw InvalidArgument("need one measurement count per mode");
  std::mt19937_64 rng(options.seed);
  DesignResult out;
  for (std::size_t i = 0; i < psis.size(); ++i) {
    const Index rank = numerical_rank(psis[i], options.rank_tol);
    if (ms[i] < 1 || ms[i] > rank)
      throw InvalidArgument("mode " + std::to_string(i) + ": M=" + std::to_string(ms[i]) +
                            " must lie in [1, rank(Psi)=" + std::to_string(rank) + "]");
    Eigen::MatrixXd left = Eigen::MatrixXd::Identity(ms[i], ms[i]);
    Eigen::MatrixXd right = Eigen::MatrixXd::Identity(rank, rank);
    if (options.choice == OrthonormalChoice::kRandom) {
      left = random_orthonormal(ms[i], rng);
      right = random_orthonormal(rank, rng);
    }
    out.phis_unnormalized.push_back(separable_mode_solution(psis[i], ms[i], left, right, options.rank_tol));
  }
  out.objective_trace.push_back(frame_objective(psis, out.phis_unnormalized));
  out.phis = normalize_sensing(out.phis_unnormalized);
  return out;
}

double approach2_objective(const FactorSet& phis, const FactorSet& psis, const DesignConfig& cfg) {
  check_pairs(phis, psis);
  double psi_sq = 1, cross = 1, a_gram = 1, a_sq = 1, phi_sq = 1, dim = 1;
  for (std::size_t i = 0; i < psis.size(); ++i) {
    const ModeTerms t = mode_terms(phis[i], psis[i]);
    psi_sq *= t.psi_gram_sq;
    cross *= t.cross;
    a_gram *= t.a_gram_sq;
    a_sq *= t.a_sq;
    phi_sq *= t.phi_sq;
    dim *= t.dim;
  }
  const double term1 = psi_sq - 2 * cross + a_gram;
  const double term3 = dim - 2 * a_sq + a_gram;
  return (1 - cfg.beta) * term1 + cfg.alpha * phi_sq + cfg.beta * term3;
}

double approach2_objective_explicit(const FactorSet& phis, const FactorSet& psis, const DesignConfig& cfg) {
  check_pairs(phis, psis);
  const Eigen::MatrixXd psi = kron_all(psis);
  const Eigen::MatrixXd phi = kron_all(phis);
  const Eigen::MatrixXd g_psi = psi.transpose() * psi;
  const Eigen::MatrixXd a = phi * psi;
  const Eigen::MatrixXd g_a = a.transpose() * a;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(g_a.rows(), g_a.cols());
  return (1 - cfg.beta) * (g_psi - g_a).squaredNorm() + cfg.alpha * phi.squaredNorm() +
         cfg.beta * (eye - g_a).squaredNorm();
}

Eigen::MatrixXd approach2_gradient(const FactorSet& phis, const FactorSet& psis, const DesignConfig& cfg,
                                   Index mode) {
  check_pairs(phis, psis);
  if (mode < 0 || mode >= static_cast<Index>(phis.size()))
    throw InvalidArgument("approach2_gradient: mode " + std::to_string(mode) + " out of range");
  // Products over the other modes.
  double omega = 1, theta = 1, tau = 1, rho = 1;
  for (std::size_t j = 0; j < phis.size(); ++j) {
    if (static_cast<Index>(j) == mode) continue;
    const ModeTerms t = mode_terms(phis[j], psis[j]);
    omega *= t.a_gram_sq;
    theta *= t.a_sq;
    tau *= t.phi_sq;
    rho *= t.cross;
  }
  const Eigen::MatrixXd& phi = phis[mode];
  const Eigen::MatrixXd& psi = psis[mode];
  const Eigen::MatrixXd a = phi * psi;
  const Eigen::MatrixXd a_psit = a * psi.transpose();  // A Psi^T
  // A G_A Psi^T = (A A^T)(A Psi^T);  A G_Psi Psi^T = (A Psi^T)(Psi Psi^T)
  return 4 * omega * (a * a.transpose()) * a_psit - 4 * cfg.beta * theta * a_psit + 2 * cfg.alpha * tau * phi +
         4 * (cfg.beta - 1) * rho * a_psit * (psi * psi.transpose());
}

DesignResult design_gradient(const FactorSet& psis, const FactorSet& phis0, const DesignConfig& cfg) {
  cfg.validate();
  check_pairs(phis0, psis);
  constexpr int kDivergenceWindow = 10;
  FactorSet phis = phis0;
  FactorSet last_finite = phis;
  DesignResult out;
  double f = approach2_objective(phis, psis, cfg);
  if (!std::isfinite(f)) throw NumericalFailure("design_gradient: initial objective is not finite");
  out.objective_trace.push_back(f);
  int growing = 0;
  for (int cycle = 0; cycle < cfg.max_iters; ++cycle) {
    for (std::size_t i = 0; i < phis.size(); ++i) {
      phis[i] -= cfg.eta * approach2_gradient(phis, psis, cfg, static_cast<Index>(i));
    }
    const double f_new = approach2_objective(phis, psis, cfg);
    out.iterations_used = cycle + 1;
    if (!std::isfinite(f_new))
      throw StepSizeFailure("design_gradient: objective became non-finite; reduce eta", last_finite);
    last_finite = phis;
    out.objective_trace.push_back(f_new);
    if (f_new > f) {
      out.monotone = false;
      if (++growing >= kDivergenceWindow)
        throw StepSizeFailure("design_gradient: objective grew for " + std::to_string(kDivergenceWindow) +
                                  " consecutive cycles; reduce eta",
                              last_finite);
    } else {
      growing = 0;
      const double rel = (f - f_new) / std::max(std::abs(f), std::numeric_limits<double>::min());
      if (rel < cfg.stop_rel_tol) {
        f = f_new;
        break;
      }
    }
    f = f_new;
  }
  out.phis_unnormalized = phis;
  out.phis = normalize_sensing(phis);
  return out;
}

DesignResult design_sapiro_stub(const FactorSet& psis, const std::vector<Index>& ms, int iters, double shrink) {
  if (psis.size() != ms.size() || psis.empty()) throw InvalidArgument("need one measurement count per mode");
  DesignResult out;
  for (std::size_t i = 0; i < psis.size(); ++i) {
    const Eigen::MatrixXd& psi = psis[i];
    const Index m = ms[i];
    if (m < 1 || m > psi.rows()) throw InvalidArgument("invalid measurement count");
    // Start from the leading left singular directions of Psi.
    const auto s = svd(psi);
    Eigen::MatrixXd phi = s.u.leftCols(m).transpose();
    const Eigen::MatrixXd psi_pinv = psi.completeOrthogonalDecomposition().pseudoInverse();
    for (int it = 0; it < iters; ++it) {
      Eigen::MatrixXd a = phi * psi;
      for (Index j = 0; j < a.cols(); ++j) {
        const double n = a.col(j).norm();
        if (n > 0) a.col(j) /= n;
      }
      Eigen::MatrixXd target = a.transpose() * a;
      target *= shrink;
      target.diagonal().setOnes();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(target);
      const Eigen::VectorXd top = es.eigenvalues().tail(m).cwiseMax(0.0).cwiseSqrt();
      const Eigen::MatrixXd a_target = top.asDiagonal() * es.eigenvectors().rightCols(m).transpose();
      phi = a_target * psi_pinv;
    }
    out.phis_unnormalized.push_back(phi);
  }
  out.objective_trace.push_back(frame_objective(psis, out.phis_unnormalized));
  out.phis = normalize_sensing(out.phis_unnormalized);
  return out;
}

}  // namespace tensorcs
