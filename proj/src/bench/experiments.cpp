#include "tensorcs/bench/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "tensorcs/errors.hpp"
#include "tensorcs/metrics.hpp"
#include "tensorcs/reconstruct.hpp"

namespace tensorcs::bench {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kSetupTrial = std::numeric_limits<std::uint64_t>::max();

FactorSet dct_dictionaries(const ExperimentConfig& cfg) {
  FactorSet psis;
  for (Index i = 0; i < cfg.modes(); ++i) psis.push_back(overcomplete_dct(cfg.n[i], cfg.n_hat[i]));
  return psis;
}

FactorSet equivalent(const FactorSet& phis, const FactorSet& psis) {
  FactorSet a;
  for (std::size_t i = 0; i < phis.size(); ++i) a.push_back(phis[i] * psis[i]);
  return a;
}

Shape shape_of(const std::vector<Index>& v) { return Shape(v.begin(), v.end()); }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  return out + "\"";
}

std::string join_trace(const std::vector<double>& t) {
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) out += ' ';
    out += format_number(t[i]);
  }
  return out;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial) {
  return splitmix(splitmix(master) ^ trial);
}

unsigned thread_budget() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TENSORCS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

DesignResult run_design(const std::string& design, const FactorSet& psis, const FactorSet& phis0,
                        const ExperimentConfig& cfg) {
  if (design == "gaussian") {
    DesignResult r;
    r.phis = phis0;
    r.phis_unnormalized = phis0;
    return r;
  }
  if (design == "approach1") {
    SeparableOptions o;
    o.choice = cfg.separable_choice == "random" ? OrthonormalChoice::kRandom : OrthonormalChoice::kIdentity;
    o.seed = cfg.seed;
    return design_separable(psis, cfg.m, o);
  }
  if (design == "approach2") return design_gradient(psis, phis0, cfg.design_cfg);
  if (design == "separable-sapiro-stub") return design_sapiro_stub(psis, cfg.m);
  throw InvalidArgument("unknown design '" + design + "'");
}

DesignContext make_design_context(const ExperimentConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  DesignContext ctx;
  FactorSet phis0;
  for (Index i = 0; i < cfg.modes(); ++i) ctx.psis.push_back(gaussian_dictionary(cfg.n[i], cfg.n_hat[i], rng));
  for (Index i = 0; i < cfg.modes(); ++i) phis0.push_back(gaussian_sensing(cfg.m[i], cfg.n[i], rng));
  ctx.design = run_design(cfg.design, ctx.psis, phis0, cfg);
  ctx.phis = ctx.design.phis;
  return ctx;
}

SparseTensor recover_stack(const FactorSet& a, const Tensor& y, const ExperimentConfig& cfg) {
  const Index count = y.shape().back();
  Shape coef;
  for (const auto& f : a) coef.push_back(f.cols());
  const Index len = shape_size(coef);
  std::vector<Index> support;
  std::vector<double> values;
  const KronOperator op(a);
  for (Index t = 0; t < count; ++t) {
    const Tensor yt = last_mode_slice(y, t);
    SparseTensor s;
    if (cfg.recovery == "omp") {
      s = kron_omp_normalized(a, yt, cfg.k);
    } else {
      FistaOptions o;
      o.lambda = cfg.lambda;
      o.max_iters = cfg.fista_iters;
      s = debias(op, yt, fista_bpdn(op, yt, o).solution);
    }
    for (std::size_t e = 0; e < s.nnz(); ++e) {
      support.push_back(t * len + s.support()[e]);
      values.push_back(s.values()[e]);
    }
  }
  coef.push_back(count);
  return SparseTensor(std::move(coef), std::move(support), std::move(values));
}

TrialOutcome design_trial(const ExperimentConfig& cfg, const DesignContext& ctx, std::uint64_t seed) {
  Rng rng(seed);
  const SparseTensor s = sparse_coefficients(shape_of(cfg.n_hat), 1, cfg.k, parse_support_pattern(cfg.support), rng);
  const Tensor x = synthesize(s, ctx.psis);
  const Tensor y = measure(x, ctx.phis, cfg.sigma2, rng);
  const Tensor x_hat = synthesize(recover_stack(equivalent(ctx.phis, ctx.psis), y, cfg), ctx.psis);
  TrialOutcome out;
  out.mse = mse(x, x_hat);
  out.psnr = psnr_from_mse(out.mse, 1.0);
  out.iterations = ctx.design.iterations_used;
  out.trace = ctx.design.objective_trace;
  return out;
}

TrialOutcome learn_trial(const ExperimentConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const Index n = cfg.modes();
  FactorSet truth, phis;
  for (Index i = 0; i < n; ++i) truth.push_back(gaussian_dictionary(cfg.n[i], cfg.n_hat[i], rng));
  for (Index i = 0; i < n; ++i) phis.push_back(gaussian_sensing(cfg.m[i], cfg.n[i], rng));
  const SupportPattern pattern = parse_support_pattern(cfg.support);
  const Shape coef = shape_of(cfg.n_hat);

  TrainingSet train;
  train.signals = synthesize(sparse_coefficients(coef, cfg.train_count, cfg.k, pattern, rng), truth);
  add_noise(train.signals, cfg.sigma2, rng);
  const Tensor x_test = synthesize(sparse_coefficients(coef, cfg.test_count, cfg.k, pattern, rng), truth);
  Tensor x_noisy = x_test;
  add_noise(x_noisy, cfg.sigma2, rng);
  const Tensor y_test = measure(x_noisy, phis, 0.0, rng);

  const FactorSet psi0 = dct_dictionaries(cfg);
  LearnConfig lc = cfg.learn_cfg;
  lc.sparsity_k = cfg.k;
  lc.seed = seed;
  TrialOutcome out;
  Tensor x_hat;
  if (cfg.learner == "cksvd") {
    const Index len = shape_size(shape_of(cfg.n));
    const Eigen::Map<const Eigen::MatrixXd> xv(train.signals.data().data(), len, cfg.train_count);
    const Eigen::MatrixXd phi = kron_all(phis);
    lc.gamma = cfg.cksvd_gamma;
    const LearnResult r = learn_cksvd(xv, phi, kron_all(psi0), lc);
    const Tensor yv({phi.rows(), cfg.test_count}, y_test.data());
    const Tensor xv_hat = synthesize(recover_stack({phi * r.psis[0]}, yv, cfg), r.psis);
    x_hat = Tensor(x_test.shape(), xv_hat.data());
    out.trace = r.are_trace;
    out.final_are = r.final_are;
  } else {
    lc.coupled = cfg.learner == "ctksvd";
    const LearnResult r = learn(train, phis, psi0, lc);
    x_hat = synthesize(recover_stack(equivalent(phis, r.psis), y_test, cfg), r.psis);
    out.trace = r.are_trace;
    out.final_are = r.final_are;
  }
  out.iterations = lc.outer_iters;
  out.mse = mse(x_test, x_hat);
  out.psnr = psnr_from_mse(out.mse, 1.0);
  return out;
}

double patch_psnr(const Tensor& x, const FactorSet& phis, const FactorSet& psis, const ExperimentConfig& cfg,
                  double sigma2, std::uint64_t seed) {
  Rng rng(seed);
  const Tensor y = measure(x, phis, sigma2, rng);
  const Tensor x_hat = synthesize(recover_stack(equivalent(phis, psis), y, cfg), psis);
  return psnr(x, x_hat, 1.0);
}

JointResult joint_optimize(const Tensor& train, const Tensor& validation, const FactorSet& phis0,
                           const FactorSet& psis0, const ExperimentConfig& cfg) {
  JointResult out;
  out.phis = phis0;
  for (const auto& p : psis0) out.psis.push_back(normalize_columns(p));
  TrainingSet set;
  set.signals = train;
  LearnConfig lc = cfg.learn_cfg;
  lc.sparsity_k = cfg.k;
  lc.outer_iters = 1;
  lc.coupled = cfg.learner != "tksvd";
  for (int it = 0; it < cfg.joint.max_iters; ++it) {
    out.phis = run_design(cfg.design, out.psis, out.phis, cfg).phis;
    if (cfg.learner != "none") {
      const LearnResult r = learn(set, out.phis, out.psis, lc);
      out.psis = r.psis;
      out.are_trace.push_back(r.final_are);
    }
    out.psnr_trace.push_back(patch_psnr(validation, out.phis, out.psis, cfg, 0.0, 0));
    out.iterations = it + 1;
    if (cfg.learner == "none") break;
    if (it > 0 && std::abs(out.psnr_trace[it] - out.psnr_trace[it - 1]) < cfg.joint.tol_db) break;
  }
  return out;
}

PatchData load_patch_images(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream& warnings) {
  PatchData data;
  std::vector<GrayImage> all;
  if (cfg.joint.images.empty()) {
    Rng rng(seed);
    for (Index i = 0; i < cfg.joint.synthetic_images; ++i)
      all.push_back(synthetic_image(cfg.joint.image_size, cfg.joint.image_size, rng));
  } else {
    all = load_pgm_corpus(cfg.joint.images, warnings);
  }
  if (all.size() < 2) throw InvalidArgument("the joint pipeline needs at least two images (train and test)");
  const auto test = static_cast<std::size_t>(std::clamp<Index>(cfg.joint.test_images, 1, static_cast<Index>(all.size()) - 1));
  data.train_images.assign(all.begin(), all.end() - static_cast<std::ptrdiff_t>(test));
  data.test_images.assign(all.end() - static_cast<std::ptrdiff_t>(test), all.end());
  return data;
}

TrialOutcome joint_trial(const ExperimentConfig& cfg, const PatchData& data, std::uint64_t seed) {
  for (Index i = 0; i < cfg.modes(); ++i)
    if (cfg.n[i] != cfg.joint.patch) throw InvalidArgument("joint pipeline: n must equal the patch size");
  Rng rng(seed);
  const Tensor train = random_patches(data.train_images, cfg.joint.patch, cfg.joint.patches_per_image, rng);
  const auto per_image = static_cast<Index>(
      std::ceil(static_cast<double>(cfg.joint.validation_count) / static_cast<double>(data.train_images.size())));
  const Tensor validation = random_patches(data.train_images, cfg.joint.patch, per_image, rng);
  const Tensor test = tile_patches(data.test_images, cfg.joint.patch);
  FactorSet phis0;
  for (Index i = 0; i < cfg.modes(); ++i) phis0.push_back(gaussian_sensing(cfg.m[i], cfg.n[i], rng));
  const JointResult jr = joint_optimize(train, validation, phis0, dct_dictionaries(cfg), cfg);
  TrialOutcome out;
  out.psnr = patch_psnr(test, jr.phis, jr.psis, cfg, cfg.sigma2, seed ^ 0x7e57ULL);
  out.mse = std::pow(10.0, -out.psnr / 10.0);
  out.iterations = jr.iterations;
  out.trace = jr.psnr_trace;
  out.final_are = jr.are_trace.empty() ? 0.0 : jr.are_trace.back();
  return out;
}

void run_sweep(const ExperimentConfig& cfg, std::ostream& csv, const SweepOptions& options) {
  const std::vector<GridPoint> grid = expand_grid(cfg);
  struct Task {
    std::size_t grid;
    int trial;
    std::uint64_t seed;
  };
  struct Setup {
    DesignContext design;
    PatchData patches;
    std::string error;
  };
  std::vector<Setup> setups(grid.size());
  std::vector<Task> tasks;
  std::ostringstream warnings;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const ExperimentConfig& c = grid[g].config;
    const std::uint64_t setup_seed = derive_seed(cfg.seed, kSetupTrial);
    try {
      if (c.experiment == "design") setups[g].design = make_design_context(c, setup_seed);
      if (c.experiment == "joint") setups[g].patches = load_patch_images(c, setup_seed, warnings);
    } catch (const InvalidArgument& e) {
      setups[g].error = std::string("invalid-argument: ") + e.what();
    } catch (const std::exception& e) {
      setups[g].error = std::string("numerical-failure: ") + e.what();
    }
    for (int t = 0; t < c.trials; ++t) tasks.push_back({g, t, derive_seed(cfg.seed, static_cast<std::uint64_t>(t))});
  }
  if (options.log && !warnings.str().empty()) *options.log << warnings.str();

  std::vector<TrialOutcome> results(tasks.size());
  std::vector<double> wall(tasks.size(), 0.0);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& task = tasks[i];
      const ExperimentConfig& c = grid[task.grid].config;
      const auto start = std::chrono::steady_clock::now();
      TrialOutcome r;
      if (!setups[task.grid].error.empty()) {
        r.status = setups[task.grid].error;
      } else {
        try {
          if (c.experiment == "design") r = design_trial(c, setups[task.grid].design, task.seed);
          else if (c.experiment == "learn") r = learn_trial(c, task.seed);
          else r = joint_trial(c, setups[task.grid].patches, task.seed);
        } catch (const InvalidArgument& e) {
          r.status = std::string("invalid-argument: ") + e.what();
        } catch (const std::exception& e) {
          r.status = std::string("numerical-failure: ") + e.what();
        }
      }
      if (r.status != "ok") r.mse = r.psnr = r.final_are = std::numeric_limits<double>::quiet_NaN();
      wall[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      results[i] = std::move(r);
      if (options.log) {
        std::lock_guard<std::mutex> lock(log_mutex);
        *options.log << "grid " << task.grid << " trial " << task.trial << ": " << results[i].status
                     << " mse=" << results[i].mse << '\n';
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads ? options.threads : thread_budget(),
                                                         static_cast<unsigned>(std::max<std::size_t>(1, tasks.size()))));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<std::string> keys;
  for (const auto& [k, v] : grid.front().params) keys.push_back(k);
  csv << "kind,grid,trial,seed";
  for (const auto& [k, v] : grid.front().params) csv << ',' << csv_field(k);
  csv << ",status,mse,psnr,final_are,iterations,mse_stderr,psnr_stderr,final_are_stderr,iterations_stderr,trace,"
         "wall_ms\n";
  auto params_of = [&](std::size_t g) {
    std::string s;
    for (const auto& [k, v] : grid[g].params) s += ',' + csv_field(v);
    return s;
  };
  std::size_t i = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<const TrialOutcome*> ok;
    for (int t = 0; t < grid[g].config.trials; ++t, ++i) {
      const TrialOutcome& r = results[i];
      csv << "trial," << g << ',' << t << ',' << tasks[i].seed << params_of(g) << ',' << csv_field(r.status) << ','
          << format_number(r.mse) << ',' << format_number(r.psnr) << ',' << format_number(r.final_are) << ','
          << r.iterations << ",,,,," << join_trace(r.trace) << ','
          << format_number(options.wall_time ? wall[i] : 0.0) << '\n';
      if (r.status == "ok") ok.push_back(&r);
    }
    // Aggregate row: means in the metric columns, standard errors after them.
    auto stats = [&](auto field) {
      const double n = static_cast<double>(ok.size());
      double mean = 0;
      for (const auto* r : ok) mean += field(*r);
      mean = ok.empty() ? std::numeric_limits<double>::quiet_NaN() : mean / n;
      double var = 0;
      for (const auto* r : ok) var += (field(*r) - mean) * (field(*r) - mean);
      return std::pair<double, double>(mean, ok.size() > 1 ? std::sqrt(var / (n - 1) / n) : 0.0);
    };
    const std::pair<double, double> s[] = {
        stats([](const TrialOutcome& r) { return r.mse; }), stats([](const TrialOutcome& r) { return r.psnr; }),
        stats([](const TrialOutcome& r) { return r.final_are; }),
        stats([](const TrialOutcome& r) { return static_cast<double>(r.iterations); })};
    csv << "aggregate," << g << ',' << ok.size() << ",0" << params_of(g) << ','
        << (ok.empty() ? "no-successful-trials" : "ok");
    for (const auto& p : s) csv << ',' << format_number(p.first);
    for (const auto& p : s) csv << ',' << format_number(p.second);
    csv << ",,0\n";
  }
}

}  // namespace tensorcs::bench
