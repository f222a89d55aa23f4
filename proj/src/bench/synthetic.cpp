#include "tensorcs/bench/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tensorcs/errors.hpp"

namespace tensorcs::bench {

SupportPattern parse_support_pattern(const std::string& name) {
  if (name == "random") return SupportPattern::kRandom;
  if (name == "product") return SupportPattern::kProduct;
  throw InvalidArgument("unknown support pattern '" + name + "' (expected random or product)");
}

Eigen::MatrixXd gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

Eigen::MatrixXd gaussian_dictionary(Index rows, Index cols, Rng& rng) {
  Eigen::MatrixXd m = gaussian_matrix(rows, cols, rng);
  m.colwise().normalize();
  return m;
}

Eigen::MatrixXd gaussian_sensing(Index rows, Index cols, Rng& rng) {
  Eigen::MatrixXd m = gaussian_matrix(rows, cols, rng);
  return m * (std::sqrt(static_cast<double>(cols)) / m.norm());
}

std::vector<Index> product_sparsity(Index k, Index modes) {
  const auto root = static_cast<Index>(std::llround(std::pow(static_cast<double>(k), 1.0 / modes)));
  Index p = 1;
  for (Index i = 0; i < modes; ++i) p *= root;
  if (p != k) throw InvalidArgument("product support needs K to be a perfect power of the mode count");
  return std::vector<Index>(static_cast<std::size_t>(modes), root);
}

namespace {

std::vector<Index> sample_without_replacement(Index n, Index k, Rng& rng) {
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(static_cast<std::size_t>(k));
  return all;
}

}  // namespace

SparseTensor sparse_coefficients(const Shape& coef_shape, Index count, Index k, SupportPattern pattern, Rng& rng) {
  const Index len = shape_size(coef_shape);
  if (k < 0 || k > len) throw InvalidArgument("sparsity K exceeds the number of coefficients");
  std::normal_distribution<double> g;
  std::vector<std::pair<Index, double>> entries;
  entries.reserve(static_cast<std::size_t>(k * count));
  std::vector<Index> per_mode;
  if (pattern == SupportPattern::kProduct) {
    per_mode = product_sparsity(k, static_cast<Index>(coef_shape.size()));
    for (std::size_t m = 0; m < coef_shape.size(); ++m)
      if (per_mode[m] > coef_shape[m]) throw InvalidArgument("product support larger than a mode");
  }
  for (Index t = 0; t < count; ++t) {
    std::vector<Index> supp;
    if (pattern == SupportPattern::kRandom) {
      supp = sample_without_replacement(len, k, rng);
    } else {
      supp = {0};
      Index stride = 1;
      for (std::size_t m = 0; m < coef_shape.size(); ++m) {
        const auto idx = sample_without_replacement(coef_shape[m], per_mode[m], rng);
        std::vector<Index> next;
        for (Index base : supp)
          for (Index i : idx) next.push_back(base + i * stride);
        supp = std::move(next);
        stride *= coef_shape[m];
      }
    }
    std::sort(supp.begin(), supp.end());
    for (Index i : supp) entries.emplace_back(t * len + i, g(rng));
  }
  Shape shape = coef_shape;
  shape.push_back(count);
  std::vector<Index> support;
  std::vector<double> values;
  for (const auto& [i, v] : entries) {
    support.push_back(i);
    values.push_back(v);
  }
  return SparseTensor(std::move(shape), std::move(support), std::move(values));
}

Tensor synthesize(const SparseTensor& s, const FactorSet& psis) {
  const Index count = s.shape().back();
  Shape out_shape;
  for (const auto& p : psis) out_shape.push_back(p.rows());
  const Index out_len = shape_size(out_shape);
  Shape coef_shape(s.shape().begin(), s.shape().end() - 1);
  const Index coef_len = shape_size(coef_shape);
  const KronOperator op(psis);
  Shape full = out_shape;
  full.push_back(count);
  Tensor x(full);
  for (std::size_t e = 0; e < s.nnz(); ++e) {
    const Index t = s.support()[e] / coef_len;
    x.data().segment(t * out_len, out_len) += s.values()[e] * op.column(s.support()[e] % coef_len);
  }
  return x;
}

Tensor measure(const Tensor& x, const FactorSet& phis, double sigma2, Rng& rng) {
  Tensor y = x;
  for (std::size_t i = 0; i < phis.size(); ++i) y = mode_product(y, phis[i], static_cast<Index>(i));
  add_noise(y, sigma2, rng);
  return y;
}

void add_noise(Tensor& t, double sigma2, Rng& rng) {
  if (sigma2 < 0) throw InvalidArgument("noise variance must be >= 0");
  if (sigma2 == 0) return;
  std::normal_distribution<double> g(0.0, std::sqrt(sigma2));
  for (Index i = 0; i < t.size(); ++i) t[i] += g(rng);
}

}  // namespace tensorcs::bench
