#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "support.hpp"
#include "tensorcs/errors.hpp"
#include "tensorcs/linalg.hpp"
#include "tensorcs/reconstruct.hpp"

using namespace tensorcs;
using testing::gaussian;

namespace {

std::vector<Index> random_support(Index n, Index k, std::mt19937_64& rng) {
  std::vector<Index> all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[i] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(k));
  std::sort(all.begin(), all.end());
  return all;
}

// Exhaustive l0 oracle: support of size k with the smallest LS residual.
std::vector<Index> best_support(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, Index k) {
  std::vector<Index> idx(static_cast<std::size_t>(k)), best;
  for (Index i = 0; i < k; ++i) idx[i] = i;
  double best_res = std::numeric_limits<double>::infinity();
  const Index n = a.cols();
  while (true) {
    Eigen::MatrixXd b(a.rows(), k);
    for (Index i = 0; i < k; ++i) b.col(i) = a.col(idx[i]);
    const double res = (b * least_squares(b, y) - y).norm();
    if (res < best_res) {
      best_res = res;
      best = idx;
    }
    Index i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (Index j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return best;
}

}  // namespace

TEST_CASE("omp picks a single scaled column") {
  std::mt19937_64 rng(31);
  const Eigen::MatrixXd a = testing::unit_columns(gaussian(10, 20, rng));
  const SparseTensor s = omp(a, 3.0 * a.col(5), 4);
  REQUIRE(s.nnz() == 1);
  CHECK(s.support()[0] == 5);
  CHECK(s.values()[0] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("omp on a zero signal returns nothing") {
  std::mt19937_64 rng(32);
  CHECK(omp(gaussian(5, 8, rng), Eigen::VectorXd::Zero(5), 3).nnz() == 0);
  CHECK_THROWS_AS(omp(gaussian(5, 8, rng), Eigen::VectorXd::Zero(5), 9), InvalidArgument);
}

TEST_CASE("omp ties go to the lowest index") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  const SparseTensor s = omp(a, Eigen::Vector3d(1, 1, 1), 1);
  CHECK(s.support() == std::vector<Index>{0});
}

TEST_CASE("omp recovers sparse supports from Gaussian measurements") {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> g;
  int exact = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    const Eigen::MatrixXd a = testing::unit_columns(gaussian(32, 64, rng));
    const auto supp = random_support(64, 4, rng);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(64);
    for (Index i : supp) x(i) = g(rng);
    const SparseTensor s = omp(a, a * x, 4);
    if (s.support() == supp) ++exact;
  }
  CHECK(exact >= 475);
}

TEST_CASE("omp agrees with exhaustive search for K = 1, 2") {
  std::mt19937_64 rng(34);
  std::normal_distribution<double> g;
  for (Index k : {1, 2}) {
    int agree = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
      const Eigen::MatrixXd a = testing::unit_columns(gaussian(16, 24, rng));
      const auto supp = random_support(24, k, rng);
      Eigen::VectorXd x = Eigen::VectorXd::Zero(24);
      for (Index i : supp) x(i) = 1.0 + std::abs(g(rng));
      const Eigen::VectorXd y = a * x;
      const auto oracle = best_support(a, y, k);
      CHECK(oracle == supp);
      if (omp(a, y, k).support() == oracle) ++agree;
    }
    CHECK(agree >= 95);
  }
}

TEST_CASE("Kronecker OMP matches OMP on the explicit Kronecker matrix") {
  std::mt19937_64 rng(35);
  std::normal_distribution<double> g;
  for (int seed = 0; seed < 200; ++seed) {
    const Index n = 2 + seed % 2;
    FactorSet f;
    Shape in;
    for (Index i = 0; i < n; ++i) {
      const Index cols = n == 2 ? 4 + (seed + 3 * i) % 9 : 3 + (seed + i) % 5;
      const Index rows = 2 + (seed * 7 + i) % (cols - 1);
      f.push_back(gaussian(rows, cols, rng));
      in.push_back(cols);
    }
    const KronOperator op(f);
    REQUIRE(op.cols() <= 1024);
    const Index k = 1 + seed % 5;
    Tensor s(in);
    for (Index i : random_support(op.cols(), k, rng)) s[i] = g(rng);
    Tensor y = op.apply(s);
    if (seed % 3 == 0)
      for (Index i = 0; i < y.size(); ++i) y[i] += 0.05 * g(rng);
    const SparseTensor fast = kron_omp(op, y, k);
    const SparseTensor slow = omp(op.explicit_matrix(), y.data(), k);
    REQUIRE(fast.support() == slow.support());
    for (std::size_t i = 0; i < fast.nnz(); ++i)
      CHECK(std::abs(fast.values()[i] - slow.values()[i]) <= 1e-10 * std::max(1.0, std::abs(slow.values()[i])));
    CHECK(static_cast<Index>(fast.nnz()) <= k);
    CHECK(fast.shape() == in);
  }
}

TEST_CASE("Kronecker OMP recovers a single nonzero exactly") {
  std::mt19937_64 rng(36);
  const KronOperator op({testing::unit_columns(gaussian(5, 8, rng)), testing::unit_columns(gaussian(6, 9, rng))});
  Tensor s({8, 9});
  s({3, 7}) = 2.5;
  const SparseTensor r = kron_omp(op, op.apply(s), 1);
  CHECK(r.to_dense().data().isApprox(s.data(), 1e-12));
}

TEST_CASE("FISTA with a huge lambda returns zero") {
  std::mt19937_64 rng(37);
  const KronOperator op({gaussian(4, 6, rng), gaussian(3, 5, rng)});
  const Tensor y = testing::random_tensor(op.output_shape(), rng);
  CHECK(fista_bpdn(op, y, 1e6, 50).solution.nnz() == 0);
  FistaOptions bad;
  bad.lambda = 0;
  CHECK_THROWS_AS(fista_bpdn(op, y, bad), InvalidArgument);
}

TEST_CASE("FISTA objective is monotone with restarts") {
  std::mt19937_64 rng(38);
  for (int t = 0; t < 10; ++t) {
    const KronOperator op({gaussian(6, 12, rng), gaussian(5, 10, rng)});
    const Tensor y = testing::random_tensor(op.output_shape(), rng);
    FistaOptions o;
    o.lambda = 0.05;
    o.max_iters = 300;
    o.rel_tol = 0;
    const FistaResult r = fista_bpdn(op, y, o);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
      CHECK(r.objective_trace[i] <= r.objective_trace[i - 1] * (1 + 1e-12));
  }
}

TEST_CASE("FISTA plus debiasing recovers a noiseless sparse tensor") {
  std::mt19937_64 rng(39);
  std::normal_distribution<double> g;
  for (int t = 0; t < 10; ++t) {
    const KronOperator op({testing::unit_columns(gaussian(12, 16, rng)), testing::unit_columns(gaussian(12, 16, rng))});
    Tensor s({16, 16});
    const auto supp = random_support(256, 4, rng);
    for (Index i : supp) s[i] = (g(rng) > 0 ? 1 : -1) * (1 + std::abs(g(rng)));
    const Tensor y = op.apply(s);
    FistaOptions o;
    o.lambda = 1e-3;
    o.max_iters = 3000;
    const SparseTensor raw = fista_bpdn(op, y, o).solution;
    const SparseTensor fixed = debias(op, y, raw);
    const SparseTensor ref = kron_omp(op, y, 4);
    std::set<Index> found(fixed.support().begin(), fixed.support().end());
    for (Index i : ref.support()) CHECK(found.count(i) == 1);
    const Tensor dense = fixed.to_dense();
    for (std::size_t i = 0; i < ref.nnz(); ++i)
      CHECK(std::abs(dense[ref.support()[i]] - ref.values()[i]) <= 0.05 * std::abs(ref.values()[i]));
  }
}
