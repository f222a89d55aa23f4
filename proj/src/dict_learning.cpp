#include "tensorcs/dict_learning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tensorcs/linalg.hpp"
#include "tensorcs/reconstruct.hpp"

namespace tensorcs {

namespace {

// Places `block` into `dst` starting at `offset` along every mode.
void place_block(Tensor& dst, const Tensor& block, const Shape& offset) {
  const Shape& bs = block.shape();
  if (block.size() == 0) return;
  Shape idx(bs.size(), 0);
  for (Index lin = 0; lin < block.size(); ++lin) {
    Index dlin = 0, stride = 1;
    for (std::size_t m = 0; m < bs.size(); ++m) {
      dlin += (idx[m] + offset[m]) * stride;
      stride *= dst.shape()[m];
    }
    dst[dlin] = block[lin];
    for (std::size_t m = 0; m < bs.size(); ++m) {
      if (++idx[m] < bs[m]) break;
      idx[m] = 0;
    }
  }
}

Tensor noiseless_measurement(const Tensor& x, const FactorSet& phis, MeasurementMask mask) {
  Tensor y = x;
  for (std::size_t i = 0; i < phis.size(); ++i)
    if (mask & (MeasurementMask{1} << i)) y = mode_product(y, phis[i], static_cast<Index>(i));
  return y;
}

int popcount(MeasurementMask m) { return __builtin_popcount(m); }

// Splits a linear coefficient index into per-mode indices.
Shape split_index(Index lin, const Shape& shape) {
  Shape idx(shape.size());
  for (std::size_t m = 0; m < shape.size(); ++m) {
    idx[m] = lin % shape[m];
    lin /= shape[m];
  }
  return idx;
}

// Columns of the Kronecker product of `ds` restricted to modes != skip, one
// per multi-index in `idx` (entries at position `skip` are ignored). With
// a single mode the result is a row of ones.
Eigen::MatrixXd other_mode_columns(const FactorSet& ds, Index skip, const std::vector<Shape>& idx) {
  Index rows = 1;
  for (std::size_t m = 0; m < ds.size(); ++m)
    if (static_cast<Index>(m) != skip) rows *= ds[m].rows();
  Eigen::MatrixXd out(rows, static_cast<Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    Eigen::VectorXd col(1);
    col(0) = 1.0;
    for (std::size_t m = 0; m < ds.size(); ++m) {
      if (static_cast<Index>(m) == skip) continue;
      const Eigen::VectorXd f = ds[m].col(idx[c][m]);
      Eigen::VectorXd next(col.size() * f.size());
      for (Index r = 0; r < f.size(); ++r) next.segment(r * col.size(), col.size()) = f(r) * col;
      col = std::move(next);
    }
    out.col(static_cast<Index>(c)) = col;
  }
  return out;
}

// Contracts `t` (order n) with `v` along `mode`, returning the remaining
// entries in canonical order.
Eigen::VectorXd contract_mode(const Tensor& t, const Eigen::VectorXd& v, Index mode) {
  return mode_product(t, v.transpose(), mode).data();
}

// Recovers a dictionary column from a mode direction of the coupled space.
Eigen::VectorXd decouple(const Eigen::MatrixXd& stack, const Eigen::VectorXd& u) {
  Eigen::VectorXd psi = (stack.transpose() * stack).ldlt().solve(stack.transpose() * u);
  const double n = psi.norm();
  if (n == 0 || !std::isfinite(n)) throw NumericalFailure("atom update produced a zero atom");
  return psi / n;
}

}  // namespace

Eigen::MatrixXd normalize_columns(Eigen::MatrixXd m) {
  for (Index j = 0; j < m.cols(); ++j) {
    const double n = m.col(j).norm();
    if (n == 0) throw InvalidArgument("dictionary column " + std::to_string(j) + " is zero");
    m.col(j) /= n;
  }
  return m;
}

void LearnConfig::validate() const {
  if (!(gamma > 0)) throw InvalidArgument("gamma must be > 0");
  if (sparsity_k < 1) throw InvalidArgument("sparsity_k must be >= 1");
  if (outer_iters < 0) throw InvalidArgument("outer_iters must be >= 0");
}

void generate_measurements(TrainingSet& train, const FactorSet& phis, double noise_variance, std::mt19937_64& rng) {
  const Index n = train.modes();
  if (static_cast<Index>(phis.size()) != n) throw InvalidArgument("need one sensing matrix per signal mode");
  if (n > 31) throw InvalidArgument("too many modes");
  std::normal_distribution<double> gauss(0.0, std::sqrt(noise_variance));
  for (MeasurementMask mask = 1; mask < (MeasurementMask{1} << n); ++mask) {
    Tensor y = noiseless_measurement(train.signals, phis, mask);
    if (noise_variance > 0)
      for (Index i = 0; i < y.size(); ++i) y[i] += gauss(rng);
    train.measurements[mask] = std::move(y);
  }
}

Eigen::MatrixXd coupling_pseudo_inverse(const Eigen::MatrixXd& phi, double gamma) {
  const Index n = phi.cols();
  Eigen::MatrixXd stack(n + phi.rows(), n);
  stack << gamma * Eigen::MatrixXd::Identity(n, n), phi;
  const Eigen::MatrixXd normal = gamma * gamma * Eigen::MatrixXd::Identity(n, n) + phi.transpose() * phi;
  return normal.ldlt().solve(stack.transpose());
}

CoupledTensor build_coupled_tensor(const TrainingSet& train, const FactorSet& phis, double gamma) {
  if (!(gamma > 0)) throw InvalidArgument("gamma must be > 0");
  const Index n = train.modes();
  if (n < 1) throw InvalidArgument("training signals need at least one mode plus the sample mode");
  if (static_cast<Index>(phis.size()) != n) throw InvalidArgument("need one sensing matrix per signal mode");
  CoupledTensor out;
  Shape zshape = train.signals.shape();
  for (Index i = 0; i < n; ++i) {
    if (phis[i].cols() != train.signals.dim(i))
      throw InvalidArgument("mode " + std::to_string(i) + ": Phi has " + std::to_string(phis[i].cols()) +
                            " columns, signals have dimension " + std::to_string(train.signals.dim(i)));
    zshape[i] += phis[i].rows();
    const Index ni = phis[i].cols();
    Eigen::MatrixXd stack(ni + phis[i].rows(), ni);
    stack << gamma * Eigen::MatrixXd::Identity(ni, ni), phis[i];
    out.stacks.push_back(std::move(stack));
  }
  out.z = Tensor(zshape);
  for (MeasurementMask mask = 0; mask < (MeasurementMask{1} << n); ++mask) {
    Shape expected = train.signals.shape();
    Shape offset(zshape.size(), 0);
    for (Index i = 0; i < n; ++i) {
      if (mask & (MeasurementMask{1} << i)) {
        expected[i] = phis[i].rows();
        offset[i] = train.signals.dim(i);
      }
    }
    const Tensor* y = &train.signals;
    Tensor generated;
    if (mask != 0) {
      auto it = train.measurements.find(mask);
      if (it != train.measurements.end()) {
        y = &it->second;
      } else {
        generated = noiseless_measurement(train.signals, phis, mask);
        y = &generated;
      }
    }
    if (y->shape() != expected)
      throw InvalidArgument("measurement stack for mask " + std::to_string(mask) + " has shape " +
                            shape_string(y->shape()) + ", expected " + shape_string(expected));
    const double weight = std::pow(gamma, static_cast<double>(n - popcount(mask)));
    place_block(out.z, (*y) * weight, offset);
  }
  return out;
}

Shape LearnState::coefficient_shape() const {
  Shape s;
  for (const auto& p : psis) s.push_back(p.cols());
  return s;
}

void LearnState::refresh_dictionaries() {
  ds.clear();
  for (std::size_t i = 0; i < psis.size(); ++i) ds.push_back(stacks[i] * psis[i]);
}

double LearnState::slice_residual_sq(Index t, const FactorSet& ds) const {
  const KronOperator op(ds);
  Eigen::VectorXd r = slice(t).data();
  const SliceCode& c = codes[t];
  for (std::size_t e = 0; e < c.support.size(); ++e) r -= c.values[e] * op.column(c.support[e]);
  return r.squaredNorm();
}

double LearnState::are() const {
  double total = 0;
  for (Index t = 0; t < count(); ++t) total += slice_residual_sq(t, ds);
  return std::sqrt(total / static_cast<double>(z.size()));
}

SparseTensor LearnState::stacked_codes() const {
  Shape shape = coefficient_shape();
  const Index len = shape_size(shape);
  shape.push_back(count());
  std::vector<Index> support;
  std::vector<double> values;
  for (Index t = 0; t < count(); ++t) {
    for (std::size_t e = 0; e < codes[t].support.size(); ++e) {
      support.push_back(codes[t].support[e] + t * len);
      values.push_back(codes[t].values[e]);
    }
  }
  return SparseTensor(shape, std::move(support), std::move(values));
}

int code_all_slices(LearnState& state, Index k, double tol) {
  // Coupled atoms are not unit norm, so selection uses normalized columns.
  const FactorSet& ds = state.dictionaries();
  int failures = 0;
  state.codes.assign(static_cast<std::size_t>(state.count()), SliceCode{});
  for (Index t = 0; t < state.count(); ++t) {
    try {
      const SparseTensor s = kron_omp_normalized(ds, state.slice(t), k, tol);
      state.codes[t].support = s.support();
      state.codes[t].values = s.values();
    } catch (const std::exception&) {
      ++failures;
    }
  }
  return failures;
}

AtomUpdate update_atom(LearnState& state, Index mode, Index atom, std::vector<char>* reseed_taken) {
  const Index n = state.modes();
  if (mode < 0 || mode >= n) throw InvalidArgument("update_atom: mode out of range");
  if (atom < 0 || atom >= state.psis[mode].cols()) throw InvalidArgument("update_atom: atom out of range");
  const Shape coef_shape = state.coefficient_shape();
  const FactorSet& ds = state.dictionaries();
  const KronOperator op(ds);
  Shape slice_shape(state.z.shape().begin(), state.z.shape().end() - 1);

  AtomUpdate out;
  // Per slice: entries that use the atom, and the residual without them.
  struct Use {
    Index slice;
    std::vector<std::size_t> entries;  // positions in codes[slice]
    std::vector<Shape> index;          // their multi-indices
  };
  std::vector<Use> uses;
  for (Index t = 0; t < state.count(); ++t) {
    const SliceCode& c = state.codes[t];
    Use u{t, {}, {}};
    for (std::size_t e = 0; e < c.support.size(); ++e) {
      Shape idx = split_index(c.support[e], coef_shape);
      if (idx[mode] == atom) {
        u.entries.push_back(e);
        u.index.push_back(std::move(idx));
      }
    }
    if (!u.entries.empty()) uses.push_back(std::move(u));
  }

  if (uses.empty()) {
    // Unused atom: reseed from the worst-represented slice not taken yet.
    Index worst = -1;
    double worst_err = -1;
    for (Index t = 0; t < state.count(); ++t) {
      if (reseed_taken && (*reseed_taken)[t]) continue;
      const double err = state.slice_residual_sq(t, ds);
      if (err > worst_err) {
        worst_err = err;
        worst = t;
      }
    }
    out.replaced = true;
    if (worst < 0 || worst_err <= 0) {
      out.accepted = false;
      out.atom = state.psis[mode].col(atom);
      return out;
    }
    if (reseed_taken) (*reseed_taken)[worst] = 1;
    Eigen::VectorXd r = state.slice(worst).data();
    const SliceCode& c = state.codes[worst];
    for (std::size_t e = 0; e < c.support.size(); ++e) r -= c.values[e] * op.column(c.support[e]);
    const Tensor rt(slice_shape, r);
    Eigen::VectorXd dir;
    if (n == 1) {
      dir = r.normalized();
    } else {
      dir = hosvd_rank1(rt).vectors[mode];
    }
    out.atom = decouple(state.stacks[mode], dir);
    state.psis[mode].col(atom) = out.atom;
    state.ds[mode].col(atom) = state.stacks[mode] * out.atom;
    return out;
  }

  // Restricted residual tensor, one slice per using sample.
  const Index slice_len = shape_size(slice_shape);
  Shape rshape = slice_shape;
  rshape.push_back(static_cast<Index>(uses.size()));
  Tensor restricted(rshape);
  std::vector<Eigen::VectorXd> own;  // current contribution of the atom per slice
  double before = 0;
  for (std::size_t u = 0; u < uses.size(); ++u) {
    const Index t = uses[u].slice;
    const SliceCode& c = state.codes[t];
    Eigen::VectorXd r = state.slice(t).data();
    Eigen::VectorXd mine = Eigen::VectorXd::Zero(slice_len);
    std::size_t next = 0;
    for (std::size_t e = 0; e < c.support.size(); ++e) {
      const Eigen::VectorXd col = c.values[e] * op.column(c.support[e]);
      if (next < uses[u].entries.size() && uses[u].entries[next] == e) {
        mine += col;
        ++next;
      } else {
        r -= col;
      }
    }
    before += (r - mine).squaredNorm();
    restricted.data().segment(static_cast<Index>(u) * slice_len, slice_len) = r;
    own.push_back(std::move(mine));
  }
  out.residual_before = before;
  for (const auto& u : uses) out.slices.push_back(u.slice);

  const auto rank1 = hosvd_rank1(restricted);
  const Eigen::VectorXd candidate = decouple(state.stacks[mode], rank1.vectors[mode]);
  const Eigen::VectorXd d_new = state.stacks[mode] * candidate;
  const double d_sq = d_new.squaredNorm();

  // Refit each slice's coefficients on its fixed support given the new atom.
  std::vector<Eigen::VectorXd> refits;
  double after = 0;
  for (std::size_t u = 0; u < uses.size(); ++u) {
    const Tensor r(slice_shape, restricted.data().segment(static_cast<Index>(u) * slice_len, slice_len));
    const Eigen::VectorXd target = contract_mode(r, d_new, mode) / d_sq;
    const Eigen::MatrixXd basis = other_mode_columns(ds, mode, uses[u].index);
    Eigen::VectorXd c = least_squares(basis, target);
    const Eigen::VectorXd w = basis * c;
    // Residual of r - d_new o w, expanded to avoid forming the outer product.
    const double res = r.squared_norm() - 2.0 * w.dot(contract_mode(r, d_new, mode)) + d_sq * w.squaredNorm();
    after += std::max(res, 0.0);
    refits.push_back(std::move(c));
  }
  out.residual_after = after;
  if (after > before + 1e-12 * std::max(1.0, before)) {
    out.accepted = false;
    out.residual_after = before;
    out.atom = state.psis[mode].col(atom);
    return out;
  }
  state.psis[mode].col(atom) = candidate;
  state.ds[mode].col(atom) = d_new;
  out.atom = candidate;
  for (std::size_t u = 0; u < uses.size(); ++u) {
    SliceCode& c = state.codes[uses[u].slice];
    for (std::size_t k = 0; k < uses[u].entries.size(); ++k) c.values[uses[u].entries[k]] = refits[u](k);
  }
  return out;
}

LearnState make_learn_state(const TrainingSet& train, const FactorSet& phis, const FactorSet& psis0,
                            const LearnConfig& cfg) {
  cfg.validate();
  const Index n = train.modes();
  if (static_cast<Index>(psis0.size()) != n) throw InvalidArgument("need one initial dictionary per signal mode");
  LearnState state;
  for (Index i = 0; i < n; ++i) {
    if (psis0[i].rows() != train.signals.dim(i))
      throw InvalidArgument("mode " + std::to_string(i) + ": dictionary has " + std::to_string(psis0[i].rows()) +
                            " rows, signals have dimension " + std::to_string(train.signals.dim(i)));
    state.psis.push_back(normalize_columns(psis0[i]));
  }
  Index atoms = 1;
  for (const auto& p : state.psis) atoms *= p.cols();
  if (cfg.sparsity_k > atoms) throw InvalidArgument("sparsity_k exceeds the number of atoms");
  if (cfg.coupled) {
    CoupledTensor ct = build_coupled_tensor(train, phis, cfg.gamma);
    state.z = std::move(ct.z);
    state.stacks = std::move(ct.stacks);
  } else {
    state.z = train.signals;
    for (Index i = 0; i < n; ++i) state.stacks.push_back(Eigen::MatrixXd::Identity(train.signals.dim(i), train.signals.dim(i)));
  }
  state.refresh_dictionaries();
  return state;
}

LearnResult learn(const TrainingSet& train, const FactorSet& phis, const FactorSet& psis0, const LearnConfig& cfg) {
  LearnState state = make_learn_state(train, phis, psis0, cfg);
  LearnResult out;
  for (const auto& p : state.psis) out.diagnostics.inner_updates_per_iter += static_cast<int>(p.cols());
  for (int iter = 0; iter < cfg.outer_iters; ++iter) {
    out.diagnostics.coder_failures += code_all_slices(state, cfg.sparsity_k, cfg.coder_tol);
    out.are_trace.push_back(state.are());
    std::vector<char> reseed_taken(static_cast<std::size_t>(state.count()), 0);
    for (Index mode = 0; mode < state.modes(); ++mode) {
      for (Index p = 0; p < state.psis[mode].cols(); ++p) {
        const AtomUpdate u = update_atom(state, mode, p, &reseed_taken);
        if (u.replaced) ++out.diagnostics.replaced_atoms;
        if (!u.accepted && !u.replaced) ++out.diagnostics.rejected_updates;
      }
    }
  }
  if (state.codes.empty()) out.diagnostics.coder_failures += code_all_slices(state, cfg.sparsity_k, cfg.coder_tol);
  out.psis = state.psis;
  out.codes = state.stacked_codes();
  out.final_are = state.are();
  return out;
}

LearnResult learn_cksvd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& phi, const Eigen::MatrixXd& psi0,
                        const LearnConfig& cfg, const Eigen::MatrixXd* y) {
  if (phi.cols() != x.rows()) throw InvalidArgument("learn_cksvd: Phi columns must match signal length");
  TrainingSet train;
  train.signals = Tensor({x.rows(), x.cols()}, Eigen::Map<const Eigen::VectorXd>(x.data(), x.size()));
  if (y) {
    if (y->rows() != phi.rows() || y->cols() != x.cols()) throw InvalidArgument("learn_cksvd: Y has wrong shape");
    train.measurements[1] = Tensor({y->rows(), y->cols()}, Eigen::Map<const Eigen::VectorXd>(y->data(), y->size()));
  }
  return learn(train, {phi}, {psi0}, cfg);
}

}  // namespace tensorcs
