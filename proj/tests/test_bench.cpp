#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "tensorcs/bench/config.hpp"
#include "tensorcs/bench/experiments.hpp"
#include "tensorcs/bench/images.hpp"
#include "tensorcs/bench/synthetic.hpp"
#include "tensorcs/errors.hpp"
#include "tensorcs/reconstruct.hpp"

using namespace tensorcs;
using namespace tensorcs::bench;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  Index column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<Index>(i);
    return -1;
  }
};

Csv parse_csv(const std::string& text) {
  Csv csv;
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  csv.header = split_csv_line(line);
  while (std::getline(is, line))
    if (!line.empty()) csv.rows.push_back(split_csv_line(line));
  return csv;
}

ExperimentConfig small_design_config() {
  ExperimentConfig cfg;
  cfg.experiment = "design";
  cfg.n = {8, 8};
  cfg.n_hat = {16, 16};
  cfg.m = {5, 5};
  cfg.k = 3;
  cfg.trials = 4;
  cfg.sigma2 = 1e-4;
  cfg.design = "approach1";
  cfg.seed = 11;
  return cfg;
}

std::string sweep_text(const ExperimentConfig& cfg, unsigned threads) {
  std::ostringstream os;
  SweepOptions o;
  o.threads = threads;
  o.wall_time = false;
  run_sweep(cfg, os, o);
  return os.str();
}

}  // namespace

TEST_CASE("noiseless measurements equal mode products exactly") {
  Rng rng(1);
  const FactorSet phis{gaussian_sensing(4, 6, rng), gaussian_sensing(3, 5, rng)};
  const Tensor x = testing::random_tensor({6, 5, 7}, rng);
  const Tensor y = measure(x, phis, 0.0, rng);
  const Tensor ref = mode_product(mode_product(x, phis[0], 0), phis[1], 1);
  REQUIRE(y.shape() == ref.shape());
  for (Index i = 0; i < y.size(); ++i) CHECK(y[i] == ref[i]);
}

TEST_CASE("noise variance matches sigma2 within 5 percent") {
  Rng rng(2);
  for (double sigma2 : {1e-2, 1.0}) {
    Tensor t({100000});
    add_noise(t, sigma2, rng);
    const double mean = t.data().mean();
    const double var = (t.data().array() - mean).square().sum() / static_cast<double>(t.size() - 1);
    CHECK(std::abs(var - sigma2) <= 0.05 * sigma2);
  }
}

TEST_CASE("sparse coefficients have exactly k nonzeros per slice") {
  Rng rng(3);
  for (auto pattern : {SupportPattern::kRandom, SupportPattern::kProduct}) {
    const SparseTensor s = sparse_coefficients({10, 12}, 50, 4, pattern, rng);
    CHECK(s.shape() == Shape{10, 12, 50});
    std::vector<int> per_slice(50, 0);
    for (Index lin : s.support()) ++per_slice[static_cast<std::size_t>(lin / 120)];
    for (int c : per_slice) CHECK(c == 4);
  }
  CHECK_THROWS_AS(sparse_coefficients({2, 2}, 1, 5, SupportPattern::kRandom, rng), InvalidArgument);
}

TEST_CASE("generated dictionaries and sensing matrices are normalized") {
  Rng rng(4);
  const Eigen::MatrixXd psi = gaussian_dictionary(10, 18, rng);
  for (Index j = 0; j < psi.cols(); ++j) CHECK(psi.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
  const Eigen::MatrixXd phi = gaussian_sensing(7, 10, rng);
  CHECK(phi.squaredNorm() == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("PGM round trip and corpus loading") {
  namespace fs = std::filesystem;
  Rng rng(5);
  const GrayImage img = synthetic_image(12, 20, rng);
  std::stringstream ss;
  write_pgm(ss, img);
  const GrayImage back = read_pgm(ss);
  REQUIRE(back.pixels.rows() == 12);
  REQUIRE(back.pixels.cols() == 20);
  CHECK((back.pixels - img.pixels).cwiseAbs().maxCoeff() <= 0.5 / 255 + 1e-12);

  const fs::path dir = fs::temp_directory_path() / "tensorcs_pgm_corpus";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_pgm(dir / "a.pgm", img);
  std::ofstream(dir / "b.pgm") << "P6\n2 2\n255\nxxxxxxxxxxxx";
  std::ostringstream warnings;
  const auto corpus = load_pgm_corpus(dir, warnings);
  CHECK(corpus.size() == 1);
  CHECK(warnings.str().find("b.pgm") != std::string::npos);
  fs::remove(dir / "a.pgm");
  CHECK_THROWS_AS(load_pgm_corpus(dir, warnings), InvalidArgument);
  fs::remove_all(dir);
}

TEST_CASE("constant 16x16 image tiles into four identical patches") {
  GrayImage img;
  img.pixels = Eigen::MatrixXd::Constant(16, 16, 0.25);
  const Tensor tiles = tile_patches(img, 8);
  REQUIRE(tiles.shape() == Shape{8, 8, 4});
  for (Index i = 0; i < tiles.size(); ++i) CHECK(tiles[i] == 0.25);
}

TEST_CASE("random patch count is per-image count times images") {
  Rng rng(6);
  std::vector<GrayImage> imgs;
  for (int i = 0; i < 3; ++i) imgs.push_back(synthetic_image(20 + i, 30, rng));
  const Tensor p = random_patches(imgs, 8, 25, rng);
  CHECK(p.shape() == Shape{8, 8, 75});
  for (Index i = 0; i < p.size(); ++i) {
    CHECK(p[i] >= 0.0);
    CHECK(p[i] <= 1.0);
  }
}

TEST_CASE("tiling round trip reproduces the cropped image") {
  Rng rng(7);
  const GrayImage img = synthetic_image(21, 35, rng);
  const Tensor tiles = tile_patches(img, 8);
  CHECK(tiles.shape() == Shape{8, 8, 8});
  const GrayImage back = untile_patches(tiles, 16, 32);
  CHECK(back.pixels == img.pixels.topLeftCorner(16, 32));
}

TEST_CASE("overcomplete DCT has unit columns and a constant atom") {
  const Eigen::MatrixXd d = overcomplete_dct(8, 16);
  REQUIRE(d.rows() == 8);
  REQUIRE(d.cols() == 16);
  for (Index j = 0; j < d.cols(); ++j) CHECK(d.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((d.col(0).array() - d(0, 0)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("TOML and JSON configs parse to the same experiment") {
  const std::string toml = R"(
# design sweep
experiment = "design"
n = [8, 8]
n_hat = 16       # broadcast
m = 5
k = 3
design = 'approach2'

[design_cfg]
alpha = 3
beta = 0.8

[sweep]
"design_cfg.beta" = [
  0.0, 0.5,
  1.0,
]
)";
  const auto j = parse_toml(toml);
  const ExperimentConfig a = from_json(j);
  const ExperimentConfig b = from_json(nlohmann::json::parse(R"({"experiment": "design", "n": [8, 8],
      "n_hat": 16, "m": 5, "k": 3, "design": "approach2", "design_cfg": {"alpha": 3, "beta": 0.8},
      "sweep": {"design_cfg.beta": [0.0, 0.5, 1.0]}})"));
  CHECK(to_json(a) == to_json(b));
  CHECK(a.n_hat == std::vector<Index>{16, 16});
  CHECK(a.design_cfg.alpha == 3.0);
  CHECK(a.learn_cfg.sparsity_k == 3);
  CHECK_THROWS_AS(from_json(nlohmann::json::parse(R"({"bogus": 1})")), InvalidArgument);
  CHECK_THROWS_AS(from_json(nlohmann::json::parse(R"({"n": 8, "n_hat": 16, "m": 9})")), InvalidArgument);
}

TEST_CASE("grid expansion varies the first key (in key order) fastest") {
  ExperimentConfig cfg = small_design_config();
  cfg.sweep = nlohmann::json::parse(R"({"sigma2": [0, 0.01], "m": [3, 4, 5]})");
  const auto grid = expand_grid(cfg);
  REQUIRE(grid.size() == 6);
  CHECK(grid[0].params[0].first == "m");
  CHECK(grid[1].config.m == std::vector<Index>{4, 4});
  CHECK(grid[2].config.m == std::vector<Index>{5, 5});
  CHECK(grid[2].config.sigma2 == 0.0);
  CHECK(grid[3].config.sigma2 == 0.01);
  CHECK(grid[3].config.m == std::vector<Index>{3, 3});
  CHECK(grid[0].params.size() == 2);
}

TEST_CASE("derived seeds are deterministic and distinct") {
  CHECK(derive_seed(1, 3) == derive_seed(1, 3));
  CHECK(derive_seed(1, 3) != derive_seed(1, 2));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("degenerate sweep writes one trial row and one aggregate row") {
  ExperimentConfig cfg = small_design_config();
  cfg.trials = 1;
  const Csv csv = parse_csv(sweep_text(cfg, 1));
  REQUIRE(csv.rows.size() == 2);
  CHECK(csv.rows[0][0] == "trial");
  CHECK(csv.rows[1][0] == "aggregate");
  const Index mse = csv.column("mse");
  CHECK(csv.rows[0][mse] == csv.rows[1][mse]);
}

TEST_CASE("aggregate means recompute from the trial rows") {
  ExperimentConfig cfg = small_design_config();
  cfg.trials = 7;
  cfg.sweep = nlohmann::json::parse(R"({"design": ["gaussian", "approach1"]})");
  const Csv csv = parse_csv(sweep_text(cfg, 2));
  REQUIRE(csv.rows.size() == 16);
  for (const char* col : {"mse", "psnr"}) {
    const Index c = csv.column(col);
    const Index se = csv.column(std::string(col) + "_stderr");
    for (int g = 0; g < 2; ++g) {
      std::vector<double> v;
      for (int t = 0; t < 7; ++t) v.push_back(std::stod(csv.rows[g * 8 + t][c]));
      double mean = 0;
      for (double x : v) mean += x;
      mean /= 7;
      double var = 0;
      for (double x : v) var += (x - mean) * (x - mean);
      const double stderr_ = std::sqrt(var / 6 / 7);
      const auto& agg = csv.rows[g * 8 + 7];
      CHECK(agg[0] == "aggregate");
      CHECK(std::abs(std::stod(agg[c]) - mean) <= 1e-12 * std::max(1.0, std::abs(mean)));
      CHECK(std::abs(std::stod(agg[se]) - stderr_) <= 1e-12 * std::max(1.0, stderr_));
    }
  }
}

TEST_CASE("sweep CSV is deterministic and independent of thread count") {
  ExperimentConfig cfg = small_design_config();
  cfg.sweep = nlohmann::json::parse(R"({"design": ["gaussian", "approach2"], "k": [2, 3]})");
  cfg.design_cfg.max_iters = 50;
  const std::string a = sweep_text(cfg, 1);
  CHECK(a == sweep_text(cfg, 1));
  CHECK(a == sweep_text(cfg, 3));
  cfg.seed = 12;
  CHECK(a != sweep_text(cfg, 1));
}

TEST_CASE("the Gaussian path never runs an optimizer") {
  ExperimentConfig cfg = small_design_config();
  cfg.design = "gaussian";
  const DesignContext ctx = make_design_context(cfg, 1);
  CHECK(ctx.design.objective_trace.empty());
  CHECK(ctx.design.iterations_used == 0);
  const TrialOutcome r = design_trial(cfg, ctx, 2);
  CHECK(r.trace.empty());
  CHECK(r.iterations == 0);

  cfg.design = "approach2";
  cfg.design_cfg.max_iters = 5;
  CHECK(make_design_context(cfg, 1).design.objective_trace.size() > 1);
}

TEST_CASE("failed grid points are recorded and the sweep continues") {
  ExperimentConfig cfg = small_design_config();
  cfg.trials = 2;
  cfg.design = "approach2";
  cfg.design_cfg.max_iters = 200;
  cfg.sweep = nlohmann::json::parse(R"({"design_cfg.eta": [10.0, 1e-6]})");
  const Csv csv = parse_csv(sweep_text(cfg, 1));
  REQUIRE(csv.rows.size() == 6);
  const Index status = csv.column("status");
  CHECK(csv.rows[0][status].rfind("numerical-failure", 0) == 0);
  CHECK(csv.rows[2][status] == "no-successful-trials");
  CHECK(csv.rows[3][status] == "ok");
  CHECK(csv.rows[5][status] == "ok");
}

TEST_CASE("normalized Kronecker OMP matches OMP on the explicit normalized matrix") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const FactorSet a{testing::gaussian(6, 9, rng), testing::gaussian(5, 7, rng)};
    const Tensor y = testing::random_tensor({6, 5}, rng);
    const SparseTensor s = kron_omp_normalized(a, y, 4);
    const Eigen::MatrixXd big = kron_all(a);
    const Eigen::VectorXd norms = big.colwise().norm().transpose();
    const Eigen::MatrixXd unit = big * norms.cwiseInverse().asDiagonal();
    const SparseTensor ref = omp(unit, y.data(), 4);
    REQUIRE(s.support() == ref.support());
    for (std::size_t e = 0; e < s.nnz(); ++e)
      CHECK(std::abs(s.values()[e] - ref.values()[e] / norms(ref.support()[e])) <= 1e-10);
  }
}

TEST_CASE("joint pipeline without a learner is a single design call") {
  ExperimentConfig cfg;
  cfg.experiment = "joint";
  cfg.n = {8, 8};
  cfg.n_hat = {16, 16};
  cfg.m = {6, 6};
  cfg.k = 4;
  cfg.design = "approach1";
  cfg.learner = "none";
  cfg.joint.synthetic_images = 3;
  cfg.joint.image_size = 32;
  cfg.joint.test_images = 1;
  cfg.joint.validation_count = 40;
  std::ostringstream warn;
  const PatchData data = load_patch_images(cfg, 3, warn);
  CHECK(data.train_images.size() == 2);
  const TrialOutcome r = joint_trial(cfg, data, 4);
  CHECK(r.status == "ok");
  CHECK(r.iterations == 1);
  CHECK(r.trace.size() == 1);
  CHECK(std::isfinite(r.psnr));
}

TEST_CASE("Gaussian design with cTKSVD in the joint loop equals a direct learn call") {
  ExperimentConfig cfg;
  cfg.experiment = "joint";
  cfg.n = {8, 8};
  cfg.n_hat = {16, 16};
  cfg.m = {6, 6};
  cfg.k = 4;
  cfg.design = "gaussian";
  cfg.learner = "ctksvd";
  cfg.learn_cfg.gamma = 1.0 / 8;
  cfg.joint.max_iters = 3;
  cfg.joint.tol_db = 0.0;
  Rng rng(9);
  std::vector<GrayImage> imgs;
  for (int i = 0; i < 2; ++i) imgs.push_back(synthetic_image(32, 32, rng));
  const Tensor train = random_patches(imgs, 8, 40, rng);
  const Tensor validation = random_patches(imgs, 8, 10, rng);
  const FactorSet phis0{gaussian_sensing(6, 8, rng), gaussian_sensing(6, 8, rng)};
  const FactorSet psis0{overcomplete_dct(8, 16), overcomplete_dct(8, 16)};
  const JointResult jr = joint_optimize(train, validation, phis0, psis0, cfg);
  CHECK(jr.iterations == 3);

  TrainingSet set;
  set.signals = train;
  LearnConfig lc = cfg.learn_cfg;
  lc.sparsity_k = cfg.k;
  lc.outer_iters = 3;
  const LearnResult direct = learn(set, phis0, psis0, lc);
  for (int i = 0; i < 2; ++i) {
    CHECK(jr.phis[i] == phis0[i]);
    CHECK((jr.psis[i] - direct.psis[i]).norm() <= 1e-10);
  }
  CHECK(jr.are_trace.back() == doctest::Approx(direct.final_are).epsilon(1e-10));
}
