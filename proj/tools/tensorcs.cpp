// tensorcs command line: design, learn, joint, recon and sweep.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tensorcs/bench/config.hpp"
#include "tensorcs/bench/experiments.hpp"
#include "tensorcs/errors.hpp"
#include "tensorcs/io.hpp"
#include "tensorcs/metrics.hpp"

namespace fs = std::filesystem;
using namespace tensorcs;
using namespace tensorcs::bench;

namespace {

constexpr const char* kCsvHelp =
    "sweep CSV columns: kind (trial|aggregate), grid, trial (number of ok trials on aggregate rows), seed, "
    "one column per swept key, status, mse, psnr, final_are, iterations, mse_stderr, psnr_stderr, "
    "final_are_stderr, iterations_stderr (aggregate rows only), trace (space separated), wall_ms";

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
};

ExperimentConfig load_config(const Common& c, const std::string& experiment) {
  nlohmann::json j = c.config.empty() ? nlohmann::json::object() : read_config_file(c.config);
  if (!experiment.empty() && !j.contains("experiment")) j["experiment"] = experiment;
  ExperimentConfig cfg = from_json(j);
  if (c.seed_set) {
    cfg.seed = c.seed;
    cfg.learn_cfg.seed = c.seed;
  }
  if (!c.out.empty()) cfg.out = c.out;
  return cfg;
}

fs::path out_dir(const ExperimentConfig& cfg, const char* fallback) {
  fs::path dir = cfg.out.empty() ? fs::path(fallback) : fs::path(cfg.out);
  fs::create_directories(dir);
  return dir;
}

void save_factors(const fs::path& dir, const std::string& stem, const FactorSet& fs_) {
  for (std::size_t i = 0; i < fs_.size(); ++i)
    io::save_matrix(dir / (stem + "_" + std::to_string(i) + ".tnsr"), fs_[i]);
}

FactorSet load_factors(const std::vector<std::string>& paths) {
  FactorSet out;
  for (const auto& p : paths) out.push_back(io::load_matrix(p));
  return out;
}

void write_trace(const fs::path& path, const std::string& name, const std::vector<double>& trace) {
  std::ofstream os(path);
  os << "iteration," << name << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) os << i << ',' << trace[i] << '\n';
}

int cmd_design(const Common& c, const std::vector<std::string>& psi_paths) {
  ExperimentConfig cfg = load_config(c, "design");
  Rng rng(cfg.seed);
  FactorSet psis = psi_paths.empty() ? FactorSet{} : load_factors(psi_paths);
  if (psis.empty())
    for (Index i = 0; i < cfg.modes(); ++i) psis.push_back(gaussian_dictionary(cfg.n[i], cfg.n_hat[i], rng));
  if (static_cast<Index>(psis.size()) != cfg.modes()) throw InvalidArgument("need one --psi per mode");
  FactorSet phis0;
  for (Index i = 0; i < cfg.modes(); ++i) phis0.push_back(gaussian_sensing(cfg.m[i], psis[i].rows(), rng));
  const DesignResult r = run_design(cfg.design, psis, phis0, cfg);
  const fs::path dir = out_dir(cfg, "design_out");
  save_factors(dir, "phi", r.phis);
  if (psi_paths.empty()) save_factors(dir, "psi", psis);
  nlohmann::json coherence = nlohmann::json::array();
  for (std::size_t i = 0; i < psis.size(); ++i) coherence.push_back(frame_report(r.phis[i], psis[i]).mutual_coherence);
  nlohmann::json report = {{"design", cfg.design},
                           {"iterations", r.iterations_used},
                           {"monotone", r.monotone},
                           {"objective_trace", r.objective_trace},
                           {"frame_objective", frame_objective(psis, r.phis)},
                           {"mode_coherence", coherence},
                           {"config", to_json(cfg)}};
  std::ofstream(dir / "report.json") << report.dump(2) << '\n';
  std::cout << "wrote " << r.phis.size() << " sensing matrices to " << dir.string() << '\n';
  return 0;
}

int cmd_learn(const Common& c, const std::string& train_path, const std::vector<std::string>& phi_paths) {
  ExperimentConfig cfg = load_config(c, "learn");
  Rng rng(cfg.seed);
  TrainingSet train;
  FactorSet phis = load_factors(phi_paths);
  if (!train_path.empty()) {
    train.signals = io::load_tnsr(train_path);
  } else {
    FactorSet truth;
    for (Index i = 0; i < cfg.modes(); ++i) truth.push_back(gaussian_dictionary(cfg.n[i], cfg.n_hat[i], rng));
    Shape coef(cfg.n_hat.begin(), cfg.n_hat.end());
    train.signals = synthesize(
        sparse_coefficients(coef, cfg.train_count, cfg.k, parse_support_pattern(cfg.support), rng), truth);
    add_noise(train.signals, cfg.sigma2, rng);
  }
  const Index modes = train.modes();
  if (phis.empty())
    for (Index i = 0; i < modes; ++i) phis.push_back(gaussian_sensing(cfg.m[i], train.signals.shape()[i], rng));
  FactorSet psi0;
  for (Index i = 0; i < modes; ++i) psi0.push_back(overcomplete_dct(train.signals.shape()[i], cfg.n_hat[i]));
  LearnConfig lc = cfg.learn_cfg;
  lc.sparsity_k = cfg.k;
  LearnResult r;
  if (cfg.learner == "cksvd") {
    const Index len = train.signals.size() / train.count();
    const Eigen::Map<const Eigen::MatrixXd> xv(train.signals.data().data(), len, train.count());
    lc.gamma = cfg.cksvd_gamma;
    r = learn_cksvd(xv, kron_all(phis), kron_all(psi0), lc);
  } else {
    lc.coupled = cfg.learner != "tksvd";
    r = learn(train, phis, psi0, lc);
  }
  const fs::path dir = out_dir(cfg, "learn_out");
  save_factors(dir, "psi", r.psis);
  save_factors(dir, "phi", phis);
  auto trace = r.are_trace;
  trace.push_back(r.final_are);
  write_trace(dir / "are.csv", "are", trace);
  std::cout << "final ARE " << r.final_are << ", dictionaries in " << dir.string() << '\n';
  return 0;
}

int cmd_joint(const Common& c) {
  ExperimentConfig cfg = load_config(c, "joint");
  const PatchData data = load_patch_images(cfg, cfg.seed, std::cerr);
  Rng rng(cfg.seed);
  const Tensor train = random_patches(data.train_images, cfg.joint.patch, cfg.joint.patches_per_image, rng);
  const Index per_image = (cfg.joint.validation_count + static_cast<Index>(data.train_images.size()) - 1) /
                          static_cast<Index>(data.train_images.size());
  const Tensor validation = random_patches(data.train_images, cfg.joint.patch, per_image, rng);
  FactorSet phis0, psis0;
  for (Index i = 0; i < cfg.modes(); ++i) {
    phis0.push_back(gaussian_sensing(cfg.m[i], cfg.joint.patch, rng));
    psis0.push_back(overcomplete_dct(cfg.joint.patch, cfg.n_hat[i]));
  }
  const JointResult jr = joint_optimize(train, validation, phis0, psis0, cfg);
  const double test_psnr =
      patch_psnr(tile_patches(data.test_images, cfg.joint.patch), jr.phis, jr.psis, cfg, cfg.sigma2, cfg.seed);
  const fs::path dir = out_dir(cfg, "joint_out");
  save_factors(dir, "phi", jr.phis);
  save_factors(dir, "psi", jr.psis);
  write_trace(dir / "psnr.csv", "validation_psnr", jr.psnr_trace);
  std::cout << jr.iterations << " iterations, test PSNR " << test_psnr << " dB, outputs in " << dir.string()
            << '\n';
  return 0;
}

int cmd_recon(const Common& c, const std::vector<std::string>& phi_paths, const std::vector<std::string>& psi_paths,
              const std::string& y_path) {
  ExperimentConfig cfg = load_config(c, "");
  const FactorSet phis = load_factors(phi_paths);
  const FactorSet psis = load_factors(psi_paths);
  if (phis.size() != psis.size() || phis.empty()) throw InvalidArgument("need matching --phi and --psi lists");
  Tensor y = io::load_tnsr(y_path);
  const bool single = y.order() == static_cast<Index>(phis.size());
  if (single) {
    Shape s = y.shape();
    s.push_back(1);
    y = Tensor(s, y.data());
  }
  FactorSet a;
  for (std::size_t i = 0; i < phis.size(); ++i) a.push_back(phis[i] * psis[i]);
  Tensor x = synthesize(recover_stack(a, y, cfg), psis);
  if (single) {
    Shape s = x.shape();
    s.pop_back();
    x = Tensor(s, x.data());
  }
  const fs::path out = cfg.out.empty() ? fs::path("recon.tnsr") : fs::path(cfg.out);
  io::save_tnsr(out, x);
  std::cout << "wrote " << shape_string(x.shape()) << " reconstruction to " << out.string() << '\n';
  return 0;
}

int cmd_sweep(const Common& c, unsigned threads, bool no_wall) {
  ExperimentConfig cfg = load_config(c, "");
  SweepOptions o;
  o.threads = threads;
  o.wall_time = !no_wall;
  o.log = &std::cerr;
  if (cfg.out.empty() || cfg.out == "-") {
    run_sweep(cfg, std::cout, o);
  } else {
    std::ofstream os(cfg.out);
    if (!os) throw InvalidArgument("cannot write " + cfg.out);
    run_sweep(cfg, os, o);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor compressive sensing: sensing design, dictionary learning and recovery"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "TOML or JSON experiment config");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { common.seed = s; common.seed_set = true; }, "master seed");
    sub->add_option("--out", common.out, "output path (directory for design/learn/joint)");
  };
  std::vector<std::string> psi_paths, phi_paths;
  std::string train_path, y_path;
  unsigned threads = 0;
  bool no_wall = false;

  auto* design = app.add_subcommand("design", "design sensing matrices for given or random dictionaries");
  add_common(design);
  design->add_option("--psi", psi_paths, "dictionary per mode (TNSR or CSV)");

  auto* learn_cmd = app.add_subcommand("learn", "learn dictionaries (tksvd, ctksvd or cksvd)");
  add_common(learn_cmd);
  learn_cmd->add_option("--train", train_path, "training tensor N_0 x ... x T (TNSR); synthetic when omitted");
  learn_cmd->add_option("--phi", phi_paths, "sensing matrix per mode; Gaussian when omitted");

  auto* joint = app.add_subcommand("joint", "joint sensing design and dictionary learning on image patches");
  add_common(joint);

  auto* recon = app.add_subcommand("recon", "recover signals from measurements");
  add_common(recon);
  recon->add_option("--phi", phi_paths, "sensing matrix per mode")->required();
  recon->add_option("--psi", psi_paths, "dictionary per mode")->required();
  recon->add_option("--measurements", y_path, "measurement tensor, optionally with a trailing sample mode")
      ->required();

  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep and write CSV");
  add_common(sweep);
  sweep->add_option("--threads", threads, "worker threads (default TENSORCS_THREADS or all cores)");
  sweep->add_flag("--no-wall-time", no_wall, "write 0 in the wall_ms column");
  sweep->footer(kCsvHelp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*design) return cmd_design(common, psi_paths);
    if (*learn_cmd) return cmd_learn(common, train_path, phi_paths);
    if (*joint) return cmd_joint(common);
    if (*recon) return cmd_recon(common, phi_paths, psi_paths, y_path);
    if (*sweep) return cmd_sweep(common, threads, no_wall);
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
