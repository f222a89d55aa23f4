#include "tensorcs/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tensorcs/linalg.hpp"

namespace tensorcs {

namespace {

// Shared OMP loop. `correlate(r)` returns A^T r as a flat vector and
// `column(j)` returns A's j-th column, so both variants make identical
// decisions.
template <typename Correlate, typename Column>
SparseTensor omp_core(const Eigen::VectorXd& y, Index cols, Index k, double tol, const Shape& out_shape,
                      Correlate&& correlate, Column&& column) {
  if (k < 0 || k > cols) throw InvalidArgument("omp: sparsity budget exceeds the number of atoms");
  std::vector<Index> support;
  std::vector<char> chosen(static_cast<std::size_t>(cols), 0);
  Eigen::MatrixXd basis(y.size(), 0);
  Eigen::VectorXd coeffs;
  Eigen::VectorXd residual = y;
  // Residuals at round-off level count as an exact fit.
  const double stop = std::max(tol, 1e-12 * y.norm());
  while (static_cast<Index>(support.size()) < k && static_cast<Index>(support.size()) < y.size()) {
    if (residual.norm() <= stop) break;
    const Eigen::VectorXd corr = correlate(residual);
    Index best = -1;
    double best_val = 0;
    for (Index j = 0; j < cols; ++j) {
      if (chosen[j]) continue;
      const double v = std::abs(corr[j]);
      if (v > best_val) {
        best_val = v;
        best = j;
      }
    }
    if (best < 0) break;
    chosen[best] = 1;
    support.push_back(best);
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = column(best);
    coeffs = least_squares(basis, y);
    residual = y - basis * coeffs;
  }
  std::vector<Index> order(support.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return support[a] < support[b]; });
  std::vector<Index> sorted_support;
  std::vector<double> values;
  for (Index i : order) {
    sorted_support.push_back(support[i]);
    values.push_back(coeffs[i]);
  }
  return SparseTensor(out_shape, std::move(sorted_support), std::move(values));
}

}  // namespace

SparseTensor omp(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, Index k, double tol) {
  if (a.rows() != y.size()) throw InvalidArgument("omp: A has " + std::to_string(a.rows()) + " rows, y has " +
                                                  std::to_string(y.size()) + " entries");
  return omp_core(
      y, a.cols(), k, tol, Shape{a.cols()}, [&](const Eigen::VectorXd& r) -> Eigen::VectorXd { return a.transpose() * r; },
      [&](Index j) -> Eigen::VectorXd { return a.col(j); });
}

SparseTensor kron_omp(const KronOperator& op, const Tensor& y, Index k, double tol) {
  const Shape out_shape = op.output_shape();
  if (y.shape() != out_shape)
    throw InvalidArgument("kron_omp: measurement shape " + shape_string(y.shape()) + " does not match " +
                          shape_string(out_shape));
  return omp_core(
      y.data(), op.cols(), k, tol, op.input_shape(),
      [&](const Eigen::VectorXd& r) -> Eigen::VectorXd { return op.adjoint(Tensor(out_shape, r)).data(); },
      [&](Index j) { return op.column(j); });
}

SparseTensor kron_omp_normalized(const FactorSet& factors, const Tensor& y, Index k, double tol) {
  FactorSet unit = factors;
  std::vector<Eigen::VectorXd> norms;
  for (auto& f : unit) {
    Eigen::VectorXd n = f.colwise().norm().transpose();
    for (Index j = 0; j < n.size(); ++j) {
      if (n(j) == 0) n(j) = 1;
      f.col(j) /= n(j);
    }
    norms.push_back(std::move(n));
  }
  const SparseTensor s = kron_omp(KronOperator(std::move(unit)), y, k, tol);
  std::vector<double> values = s.values();
  for (std::size_t e = 0; e < values.size(); ++e) {
    const Shape idx = s.multi_index(e);
    for (std::size_t m = 0; m < idx.size(); ++m) values[e] /= norms[m](idx[m]);
  }
  return SparseTensor(s.shape(), s.support(), std::move(values));
}

double bpdn_objective(const KronOperator& op, const Tensor& y, const Tensor& s, double lambda) {
  return 0.5 * (y.data() - op.apply(s).data()).squaredNorm() + lambda * s.data().lpNorm<1>();
}

FistaResult fista_bpdn(const KronOperator& op, const Tensor& y, const FistaOptions& options) {
  if (!(options.lambda > 0)) throw InvalidArgument("fista_bpdn: lambda must be positive");
  if (y.shape() != op.output_shape()) throw InvalidArgument("fista_bpdn: measurement shape mismatch");
  FistaResult out;
  const double sigma = op.norm_estimate();
  out.lipschitz = 1.01 * sigma * sigma;
  const Shape in_shape = op.input_shape();
  if (out.lipschitz == 0) {
    out.solution = SparseTensor(in_shape);
    return out;
  }
  const double step = 1.0 / out.lipschitz;
  const double thresh = options.lambda * step;
  auto soft = [thresh](Eigen::VectorXd v) {
    for (Index i = 0; i < v.size(); ++i) {
      const double a = std::abs(v[i]) - thresh;
      v[i] = a > 0 ? std::copysign(a, v[i]) : 0.0;
    }
    return v;
  };
  auto objective = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& ax) {
    return 0.5 * (y.data() - ax).squaredNorm() + options.lambda * x.lpNorm<1>();
  };

  Eigen::VectorXd x = Eigen::VectorXd::Zero(op.cols());
  Eigen::VectorXd ax = Eigen::VectorXd::Zero(op.rows());
  Eigen::VectorXd z = x;    // extrapolated point
  Eigen::VectorXd az = ax;  // A z, maintained by linearity
  double t = 1.0;
  double f = objective(x, ax);
  out.objective_trace.push_back(f);

  for (int it = 0; it < options.max_iters; ++it) {
    const Eigen::VectorXd grad = op.adjoint(Tensor(op.output_shape(), az - y.data())).data();
    Eigen::VectorXd x_new = soft(z - step * grad);
    Eigen::VectorXd ax_new = op.apply(Tensor(in_shape, x_new)).data();
    double f_new = objective(x_new, ax_new);
    if (options.restart && f_new > f) {
      // Drop momentum and take a plain proximal step from x.
      t = 1.0;
      const Eigen::VectorXd g0 = op.adjoint(Tensor(op.output_shape(), ax - y.data())).data();
      x_new = soft(x - step * g0);
      ax_new = op.apply(Tensor(in_shape, x_new)).data();
      f_new = objective(x_new, ax_new);
    }
    if (!std::isfinite(f_new)) throw NumericalFailure("fista_bpdn: objective became non-finite");
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_new;
    const double change = (x_new - x).norm();
    z = x_new + beta * (x_new - x);
    az = ax_new + beta * (ax_new - ax);
    x = std::move(x_new);
    ax = std::move(ax_new);
    t = t_new;
    f = f_new;
    out.objective_trace.push_back(f);
    out.iterations = it + 1;
    if (change <= options.rel_tol * std::max(x.norm(), 1e-300)) break;
  }
  out.solution = SparseTensor::from_dense(Tensor(in_shape, x), options.threshold);
  return out;
}

SparseTensor debias(const KronOperator& op, const Tensor& y, const SparseTensor& s) {
  if (s.nnz() == 0 || static_cast<Index>(s.nnz()) >= op.rows()) return s;
  const Eigen::MatrixXd cols = op.columns(s.support());
  const Eigen::VectorXd c = least_squares(cols, y.data());
  return SparseTensor(s.shape(), s.support(), std::vector<double>(c.data(), c.data() + c.size()));
}

}  // namespace tensorcs
