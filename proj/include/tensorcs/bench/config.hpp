#pragma once

// Experiment configuration, read from JSON or a flat TOML subset.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tensorcs/dict_learning.hpp"
#include "tensorcs/sensing_design.hpp"
#include "tensorcs/tensor.hpp"

namespace tensorcs::bench {

struct JointSettings {
  std::string images;  // PGM directory; synthetic images when empty
  Index synthetic_images = 24;
  Index image_size = 96;
  Index test_images = 8;  // images held out for testing (synthetic or corpus)
  Index patch = 8;
  Index patches_per_image = 25;
  Index validation_count = 400;
  int max_iters = 20;
  double tol_db = 0.01;
};

struct ExperimentConfig {
  std::string experiment = "design";  // design | learn | joint
  std::vector<Index> n{32, 32};
  std::vector<Index> n_hat{64, 64};
  std::vector<Index> m{20, 20};
  Index k = 20;
  int trials = 10;
  double sigma2 = 0;
  Index train_count = 2000;
  Index test_count = 500;
  std::string support = "random";     // random | product
  std::string design = "approach2";   // gaussian | approach1 | approach2 | separable-sapiro-stub
  std::string learner = "none";       // none | tksvd | ctksvd | cksvd
  std::string recovery = "omp";       // omp | fista
  double lambda = 1e-3;
  int fista_iters = 500;
  DesignConfig design_cfg;
  std::string separable_choice = "identity";  // identity | random
  LearnConfig learn_cfg;
  double cksvd_gamma = 1.0 / 32;
  JointSettings joint;
  std::uint64_t seed = 1;
  std::string out;
  nlohmann::json sweep = nlohmann::json::object();  // dotted key -> list of values

  Index modes() const { return static_cast<Index>(n.size()); }
  void validate() const;
};

// Full JSON representation (every field, defaults filled in).
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig from_json(const nlohmann::json& j);

// Flat TOML subset: [table] headers, key = value lines, # comments, quoted
// keys, strings, numbers, booleans and (nested) arrays.
nlohmann::json parse_toml(const std::string& text);

// Reads .json or .toml by extension (anything else is tried as JSON).
nlohmann::json read_config_file(const std::filesystem::path& path);

// Cartesian product of cfg.sweep; each entry is the config for one grid
// point plus the swept values as printable strings.
struct GridPoint {
  ExperimentConfig config;
  std::vector<std::pair<std::string, std::string>> params;
};
std::vector<GridPoint> expand_grid(const ExperimentConfig& cfg);

}  // namespace tensorcs::bench
