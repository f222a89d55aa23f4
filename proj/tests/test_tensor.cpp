#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "support.hpp"
#include "tensorcs/errors.hpp"
#include "tensorcs/io.hpp"
#include "tensorcs/linalg.hpp"
#include "tensorcs/sparse.hpp"
#include "tensorcs/tensor.hpp"

using namespace tensorcs;
using testing::gaussian;
using testing::random_tensor;

TEST_CASE("mode-0 index runs fastest") {
  Tensor t({2, 3, 4});
  for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  CHECK(t({1, 0, 0}) == 1.0);
  CHECK(t({0, 1, 0}) == 2.0);
  CHECK(t({0, 0, 1}) == 6.0);
  CHECK(t.multi_index(23) == Shape{1, 2, 3});
}

TEST_CASE("unfold and fold are inverse for every mode") {
  std::mt19937_64 rng(1);
  for (const Shape& shape : {Shape{3, 4}, Shape{2, 3, 4}, Shape{2, 1, 3, 2}}) {
    const Tensor t = random_tensor(shape, rng);
    for (Index m = 0; m < t.order(); ++m) {
      const Eigen::MatrixXd u = unfold(t, m);
      CHECK(u.rows() == t.dim(m));
      CHECK(fold(u, m, shape) == t);
    }
  }
}

TEST_CASE("unfolding columns match the fiber definition") {
  std::mt19937_64 rng(2);
  const Tensor t = random_tensor({2, 3, 4}, rng);
  const Eigen::MatrixXd u = unfold(t, 1);
  // column index enumerates the remaining modes with mode 0 fastest
  CHECK(u(2, 1 + 2 * 3) == t({1, 2, 3}));
}

TEST_CASE("mode product agrees with the loop-nest definition") {
  std::mt19937_64 rng(3);
  const Tensor t = random_tensor({3, 4, 5}, rng);
  for (Index m = 0; m < 3; ++m) {
    const Eigen::MatrixXd a = gaussian(2 + m, t.dim(m), rng);
    const Tensor fast = mode_product(t, a, m);
    const Tensor slow = testing::naive_mode_product(t, a, m);
    CHECK(fast.shape() == slow.shape());
    CHECK((fast.data() - slow.data()).norm() <= 1e-12 * slow.norm());
  }
}

TEST_CASE("vectorized multi-mode product equals Kronecker sensing") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + trial % 2;
    Shape shape;
    FactorSet factors;
    for (Index i = 0; i < n; ++i) {
      shape.push_back(2 + (trial + i) % 4);
      factors.push_back(gaussian(1 + (trial * 3 + i) % 5, shape.back(), rng));
    }
    const Tensor s = random_tensor(shape, rng);
    const Eigen::VectorXd lhs = multi_mode_product(s, factors).data();
    const Eigen::VectorXd rhs = kron_all(factors) * s.data();
    CHECK((lhs - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("kron follows the usual block layout") {
  Eigen::MatrixXd a(2, 2), b(1, 2);
  a << 1, 2, 3, 4;
  b << 5, 6;
  const Eigen::MatrixXd k = kron(a, b);
  Eigen::MatrixXd expected(2, 4);
  expected << 5, 6, 10, 12, 15, 18, 20, 24;
  CHECK(k == expected);
}

TEST_CASE("mode product rejects bad arguments") {
  Tensor t({2, 3});
  CHECK_THROWS_AS(mode_product(t, Eigen::MatrixXd::Ones(2, 4), 1), InvalidArgument);
  CHECK_THROWS_AS(mode_product(t, Eigen::MatrixXd::Ones(2, 2), 2), InvalidArgument);
}

TEST_CASE("outer product of vectors") {
  Eigen::VectorXd a(2), b(3);
  a << 1, 2;
  b << 3, 4, 5;
  const Tensor t = outer<double>({a, b});
  CHECK(t.shape() == Shape{2, 3});
  CHECK(t({1, 2}) == 10.0);
}

TEST_CASE("stack, slice and concatenate round trip") {
  std::mt19937_64 rng(5);
  std::vector<Tensor> slices;
  for (int i = 0; i < 4; ++i) slices.push_back(random_tensor({2, 3}, rng));
  const Tensor st = stack(slices);
  CHECK(st.shape() == Shape{2, 3, 4});
  for (int i = 0; i < 4; ++i) CHECK(last_mode_slice(st, i) == slices[i]);
  const Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 2}, rng);
  const Tensor c = concatenate(a, b, 1);
  CHECK(c({1, 4}) == b({1, 1}));
  CHECK(c({0, 2}) == a({0, 2}));
}

TEST_CASE("sparse tensor densify/sparsify round trip") {
  std::mt19937_64 rng(6);
  Tensor t({4, 5});
  t[3] = 1.5;
  t[17] = -2.0;
  const SparseTensor s = SparseTensor::from_dense(t);
  CHECK(s.nnz() == 2);
  CHECK(s.to_dense() == t);
  CHECK(SparseTensor::from_dense(s.to_dense()).support() == s.support());
  CHECK_THROWS_AS(SparseTensor({4, 5}, {3, 3}, {1.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(SparseTensor({4, 5}, {20}, {1.0}), InvalidArgument);
  CHECK_THROWS_AS(SparseTensor({4, 5}, {1}, {1.0, 2.0}), InvalidArgument);
}

TEST_CASE("Kronecker operator apply/adjoint consistency") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    FactorSet f{gaussian(3, 5, rng), gaussian(4, 2, rng), gaussian(2, 3, rng)};
    if (trial % 2) f.pop_back();
    const KronOperator op(f);
    const Tensor s = random_tensor(op.input_shape(), rng);
    const Tensor y = random_tensor(op.output_shape(), rng);
    const double lhs = op.apply(s).data().dot(y.data());
    const double rhs = s.data().dot(op.adjoint(y).data());
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    const Eigen::MatrixXd e = op.explicit_matrix();
    CHECK((op.apply(s).data() - e * s.data()).norm() <= 1e-10 * std::max(1.0, e.norm()));
    CHECK((op.column(3) - e.col(3)).norm() <= 1e-12);
    const SparseTensor sp = SparseTensor::from_dense(s);
    CHECK((op.apply(sp).data() - op.apply(s).data()).norm() <= 1e-10);
    const double sigma = Eigen::JacobiSVD<Eigen::MatrixXd>(e).singularValues()(0);
    CHECK(std::abs(op.norm_estimate() - sigma) <= 1e-6 * sigma);
  }
}

TEST_CASE("svd sign convention and reconstruction") {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd a = gaussian(5, 3, rng);
  const auto s = svd(a);
  CHECK((s.reconstruct() - a).norm() <= 1e-12 * a.norm());
  CHECK((s.u.transpose() * s.u - Eigen::MatrixXd::Identity(5, 5)).norm() <= 1e-12);
  for (Index i = 0; i < 3; ++i) {
    Index first = 0;
    while (std::abs(s.u(first, i)) <= 1e-8) ++first;
    CHECK(s.u(first, i) > 0);
  }
  const auto again = svd(-(-a));
  CHECK((again.u - s.u).norm() == 0.0);
  Eigen::MatrixXd bad = a;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(svd(bad), NumericalFailure);
}

TEST_CASE("rank-1 HOSVD recovers an exact rank-1 tensor") {
  std::mt19937_64 rng(9);
  Eigen::VectorXd a = gaussian(4, 1, rng), b = gaussian(3, 1, rng), c = gaussian(5, 1, rng);
  const double scale = a.norm() * b.norm() * c.norm();
  const Tensor t = outer<double>({a, b, c});
  const auto r = hosvd_rank1(t);
  CHECK(std::abs(r.value - scale) <= 1e-10 * scale);
  const Tensor back = outer<double>({r.vectors[0], r.vectors[1], Eigen::VectorXd(r.value * r.vectors[2])});
  CHECK((back.data() - t.data()).norm() <= 1e-10 * scale);
}

TEST_CASE("rank-1 HOSVD is no worse than random restarts") {
  // Oracle: best value among power iterations started from random points.
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor t = random_tensor({4, 3, 6}, rng);
    const auto r = hosvd_rank1(t);
    double best = 0;
    for (int start = 0; start < 20; ++start) {
      std::vector<Eigen::VectorXd> v{gaussian(4, 1, rng).normalized(), gaussian(3, 1, rng).normalized(),
                                     gaussian(6, 1, rng).normalized()};
      double value = 0;
      for (int sweep = 0; sweep < 300; ++sweep)
        for (Index m = 0; m < 3; ++m) {
          const Eigen::VectorXd w = contract_all_but(t, v, m);
          value = w.norm();
          v[m] = w / value;
        }
      best = std::max(best, value);
    }
    CHECK(r.value >= best * (1 - 1e-3));
    for (const auto& v : r.vectors) CHECK(std::abs(v.norm() - 1) <= 1e-12);
  }
}

TEST_CASE("rank-1 HOSVD of a zero tensor is flagged degenerate") {
  const auto r = hosvd_rank1(Tensor({2, 2, 2}));
  CHECK(r.degenerate);
  CHECK(r.value == 0.0);
}

TEST_CASE("TNSR and CSV round trips") {
  std::mt19937_64 rng(11);
  const Tensor t = random_tensor({3, 2, 4}, rng);
  std::stringstream ss;
  io::write_tnsr(ss, t);
  CHECK(io::read_tnsr(ss) == t);

  const auto dir = std::filesystem::temp_directory_path() / "tensorcs_io_test";
  std::filesystem::create_directories(dir);
  const Eigen::MatrixXd m = gaussian(3, 5, rng);
  io::save_matrix(dir / "m.csv", m);
  CHECK(io::load_matrix(dir / "m.csv") == m);
  io::save_matrix(dir / "m.tnsr", m);
  CHECK(io::load_matrix(dir / "m.tnsr") == m);
  io::save_tnsr(dir / "t.tnsr", t);
  CHECK(io::load_tnsr(dir / "t.tnsr") == t);
  std::filesystem::remove_all(dir);

  std::stringstream bad("1,2\n3\n");
  CHECK_THROWS_AS(io::read_csv_matrix(bad), InvalidArgument);
  std::stringstream junk("XXXX");
  CHECK_THROWS_AS(io::read_tnsr(junk), InvalidArgument);
}
