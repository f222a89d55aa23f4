#include "tensorcs/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace tensorcs {

namespace {

void check_factor_pairs(const FactorSet& psis, const FactorSet& phis) {
  if (psis.size() != phis.size() || psis.empty())
    throw InvalidArgument("need one sensing matrix per dictionary");
  for (std::size_t i = 0; i < psis.size(); ++i)
    if (phis[i].cols() != psis[i].rows())
      throw InvalidArgument("mode " + std::to_string(i) + ": Phi has " + std::to_string(phis[i].cols()) +
                            " columns but Psi has " + std::to_string(psis[i].rows()) + " rows");
}

// C(n, k), saturating at the uint64 max.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    const std::uint64_t num = n - k + i;
    if (r > std::numeric_limits<std::uint64_t>::max() / num) return std::numeric_limits<std::uint64_t>::max();
    r = r * num / i;
  }
  return r;
}

}  // namespace

double mutual_coherence(const Eigen::MatrixXd& a, Normalize mode) {
  if (a.cols() < 2) throw InvalidArgument("mutual_coherence needs at least two columns");
  Eigen::MatrixXd cols = a;
  if (mode == Normalize::kColumns) {
    for (Index j = 0; j < cols.cols(); ++j) {
      const double n = cols.col(j).norm();
      if (n == 0) throw InvalidArgument("mutual_coherence: column " + std::to_string(j) + " is zero");
      cols.col(j) /= n;
    }
  }
  Eigen::MatrixXd gram = (cols.transpose() * cols).cwiseAbs();
  gram.diagonal().setZero();
  return gram.maxCoeff();
}

double ric_bruteforce(const Eigen::MatrixXd& a, Index k, std::uint64_t max_subsets) {
  const Index n = a.cols();
  if (k < 1 || k > n) throw InvalidArgument("ric_bruteforce: need 1 <= k <= cols");
  const auto count = binomial(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k));
  if (count > max_subsets)
    throw ResourceLimit("ric_bruteforce: " + std::to_string(count) + " subsets exceed cap " +
                        std::to_string(max_subsets));
  const Eigen::MatrixXd gram = a.transpose() * a;
  std::vector<Index> idx(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) idx[i] = i;
  Eigen::MatrixXd sub(k, k);
  double delta = 0;
  while (true) {
    for (Index r = 0; r < k; ++r)
      for (Index c = 0; c < k; ++c) sub(r, c) = gram(idx[r], idx[c]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    delta = std::max({delta, ev(k - 1) - 1.0, 1.0 - ev(0)});
    // Next combination in lexicographic order.
    Index i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (Index j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return delta;
}

FrameReport frame_report(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& psi) {
  if (phi.cols() != psi.rows()) throw InvalidArgument("frame_report: Phi/Psi dimension mismatch");
  const Eigen::MatrixXd a = phi * psi;
  FrameReport r;
  r.mutual_coherence = mutual_coherence(a, Normalize::kColumns);
  r.gram_identity_deviation =
      (Eigen::MatrixXd::Identity(a.cols(), a.cols()) - a.transpose() * a).squaredNorm();
  r.sensing_energy = phi.squaredNorm();
  r.parseval_deviation = (a * a.transpose() - Eigen::MatrixXd::Identity(a.rows(), a.rows())).squaredNorm();
  return r;
}

double frame_objective(const FactorSet& psis, const FactorSet& phis) {
  check_factor_pairs(psis, phis);
  // ||I - G||^2 = tr(I) - 2 tr(G) + ||G||^2 and both trace and Frobenius
  // norm are multiplicative over Kronecker factors.
  double dim = 1, trace = 1, sq = 1;
  for (std::size_t i = 0; i < psis.size(); ++i) {
    const Eigen::MatrixXd a = phis[i] * psis[i];
    const Eigen::MatrixXd g = a.transpose() * a;
    dim *= static_cast<double>(g.rows());
    trace *= g.trace();
    sq *= g.squaredNorm();
  }
  return dim - 2 * trace + sq;
}

double frame_objective_explicit(const FactorSet& psis, const FactorSet& phis) {
  check_factor_pairs(psis, phis);
  const Eigen::MatrixXd psi = kron_all(psis);
  const Eigen::MatrixXd phi = kron_all(phis);
  const Eigen::MatrixXd a = phi * psi;
  return (Eigen::MatrixXd::Identity(a.cols(), a.cols()) - a.transpose() * a).squaredNorm();
}

double mse(const Tensor& x_true, const Tensor& x_hat) {
  if (x_true.shape() != x_hat.shape())
    throw InvalidArgument("mse: shape mismatch " + shape_string(x_true.shape()) + " vs " +
                          shape_string(x_hat.shape()));
  if (x_true.size() == 0) throw InvalidArgument("mse: empty tensors");
  return (x_true.data() - x_hat.data()).squaredNorm() / static_cast<double>(x_true.size());
}

double psnr_from_mse(double mse_value, double peak) {
  return 10.0 * std::log10(peak * peak / mse_value);
}

double psnr(const Tensor& x_true, const Tensor& x_hat, double peak) {
  return psnr_from_mse(mse(x_true, x_hat), peak);
}

double are(const Tensor& z, const SparseTensor& s, const FactorSet& ds) {
  if (static_cast<Index>(ds.size()) > static_cast<Index>(s.shape().size()))
    throw InvalidArgument("are: more factors than coefficient modes");
  Tensor approx = multi_mode_product(s.to_dense(), ds);
  if (approx.shape() != z.shape())
    throw InvalidArgument("are: reconstruction shape " + shape_string(approx.shape()) + " differs from " +
                          shape_string(z.shape()));
  return std::sqrt((z.data() - approx.data()).squaredNorm() / static_cast<double>(z.size()));
}

}  // namespace tensorcs
