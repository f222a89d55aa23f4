#include "tensorcs/bench/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "tensorcs/errors.hpp"

namespace tensorcs::bench {

using nlohmann::json;

namespace {

const char* const kDesigns[] = {"gaussian", "approach1", "approach2", "separable-sapiro-stub"};
const char* const kLearners[] = {"none", "tksvd", "ctksvd", "cksvd"};

bool one_of(const std::string& v, std::initializer_list<const char*> options) {
  for (const char* o : options)
    if (v == o) return true;
  return false;
}

std::vector<Index> read_sizes(const json& v, const char* key) {
  if (v.is_number_integer()) return {v.get<Index>(), v.get<Index>()};
  if (!v.is_array() || v.empty()) throw InvalidArgument(std::string(key) + " must be an integer or a non-empty list");
  return v.get<std::vector<Index>>();
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config key '") + key + "': " + e.what());
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Removes a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool in_str = false;
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_str) {
      if (c == '\\') ++i;
      else if (c == quote) in_str = false;
    } else if (c == '"' || c == '\'') {
      in_str = true;
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string unquote_key(const std::string& k) {
  if (k.size() >= 2 && (k.front() == '"' || k.front() == '\'') && k.back() == k.front()) return k.substr(1, k.size() - 2);
  return k;
}

// TOML literal strings use single quotes; JSON needs double quotes.
// TOML literal to JSON text: single-quoted strings, trailing array commas.
std::string toml_to_json_text(const std::string& v) {
  std::string out;
  bool in_double = false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const char c = v[i];
    if (c == '"' && (i == 0 || v[i - 1] != '\\')) in_double = !in_double;
    if (c == '\'' && !in_double) {
      out.push_back('"');
      continue;
    }
    if (c == ']' && !in_double) {
      std::size_t e = out.size();
      while (e > 0 && std::isspace(static_cast<unsigned char>(out[e - 1]))) --e;
      if (e > 0 && out[e - 1] == ',') out.erase(e - 1, 1);
    }
    out.push_back(c);
  }
  return out;
}

// Splits a dotted key, honoring quoted segments.
std::vector<std::string> split_dotted(const std::string& key) {
  std::vector<std::string> parts;
  std::string cur;
  bool in_str = false;
  for (char c : key) {
    if (c == '"') {
      in_str = !in_str;
      continue;
    }
    if (c == '.' && !in_str) {
      parts.push_back(trim(cur));
      cur.clear();
      continue;
    }
    cur.push_back(c);
  }
  parts.push_back(trim(cur));
  return parts;
}

std::string value_string(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

void ExperimentConfig::validate() const {
  if (!one_of(experiment, {"design", "learn", "joint"}))
    throw InvalidArgument("experiment must be design, learn or joint, got '" + experiment + "'");
  if (n.empty() || n.size() != n_hat.size() || n.size() != m.size())
    throw InvalidArgument("n, n_hat and m must have one entry per mode");
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] < 1 || n_hat[i] < 1 || m[i] < 1) throw InvalidArgument("sizes must be positive");
    if (!(m[i] <= n[i] && n[i] <= n_hat[i]))
      throw InvalidArgument("mode " + std::to_string(i) + ": need M <= N <= Nhat, got M=" + std::to_string(m[i]) +
                            " N=" + std::to_string(n[i]) + " Nhat=" + std::to_string(n_hat[i]));
  }
  if (k < 1 || k > shape_size(n_hat)) throw InvalidArgument("k must lie in [1, prod(n_hat)]");
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (sigma2 < 0) throw InvalidArgument("sigma2 must be >= 0");
  if (train_count < 1 || test_count < 1) throw InvalidArgument("train_count and test_count must be >= 1");
  if (!one_of(support, {"random", "product"})) throw InvalidArgument("support must be random or product");
  bool ok = false;
  for (const char* d : kDesigns) ok = ok || design == d;
  if (!ok) throw InvalidArgument("unknown design '" + design + "'");
  ok = false;
  for (const char* l : kLearners) ok = ok || learner == l;
  if (!ok) throw InvalidArgument("unknown learner '" + learner + "'");
  if (!one_of(recovery, {"omp", "fista"})) throw InvalidArgument("recovery must be omp or fista");
  if (!(lambda > 0)) throw InvalidArgument("lambda must be > 0");
  if (!one_of(separable_choice, {"identity", "random"})) throw InvalidArgument("separable_choice must be identity or random");
  if (experiment == "learn" && learner == "none") throw InvalidArgument("the learn experiment needs a learner");
  if (experiment == "joint" && learner == "cksvd") throw InvalidArgument("the joint pipeline learns separable dictionaries");
  if (experiment == "joint" && n.size() != 2) throw InvalidArgument("the joint pipeline works on 2-D patches");
  if (!(cksvd_gamma > 0)) throw InvalidArgument("cksvd_gamma must be > 0");
  if (joint.max_iters < 1 || joint.patch < 1 || joint.patches_per_image < 1 || joint.validation_count < 1)
    throw InvalidArgument("invalid joint settings");
  design_cfg.validate();
  learn_cfg.validate();
  if (!sweep.is_object()) throw InvalidArgument("sweep must be a table of key -> list of values");
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["n"] = c.n;
  j["n_hat"] = c.n_hat;
  j["m"] = c.m;
  j["k"] = c.k;
  j["trials"] = c.trials;
  j["sigma2"] = c.sigma2;
  j["train_count"] = c.train_count;
  j["test_count"] = c.test_count;
  j["support"] = c.support;
  j["design"] = c.design;
  j["learner"] = c.learner;
  j["recovery"] = c.recovery;
  j["lambda"] = c.lambda;
  j["fista_iters"] = c.fista_iters;
  j["design_cfg"] = {{"alpha", c.design_cfg.alpha},
                     {"beta", c.design_cfg.beta},
                     {"eta", c.design_cfg.eta},
                     {"max_iters", c.design_cfg.max_iters},
                     {"stop_rel_tol", c.design_cfg.stop_rel_tol},
                     {"separable_choice", c.separable_choice}};
  j["learn_cfg"] = {{"gamma", c.learn_cfg.gamma},
                    {"outer_iters", c.learn_cfg.outer_iters},
                    {"coupled", c.learn_cfg.coupled},
                    {"cksvd_gamma", c.cksvd_gamma}};
  j["joint"] = {{"images", c.joint.images},
                {"synthetic_images", c.joint.synthetic_images},
                {"image_size", c.joint.image_size},
                {"test_images", c.joint.test_images},
                {"patch", c.joint.patch},
                {"patches_per_image", c.joint.patches_per_image},
                {"validation_count", c.joint.validation_count},
                {"max_iters", c.joint.max_iters},
                {"tol_db", c.joint.tol_db}};
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["sweep"] = c.sweep;
  return j;
}

ExperimentConfig from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("config must be a table/object");
  static const std::vector<std::string> known = {
      "experiment", "n", "n_hat", "m", "k", "trials", "sigma2", "train_count", "test_count", "support", "design",
      "learner", "recovery", "lambda", "fista_iters", "design_cfg", "learn_cfg", "joint", "seed", "out", "sweep"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw InvalidArgument("unknown config key '" + key + "'");
  ExperimentConfig c;
  read(j, "experiment", c.experiment);
  if (j.contains("n")) c.n = read_sizes(j["n"], "n");
  if (j.contains("n_hat")) c.n_hat = read_sizes(j["n_hat"], "n_hat");
  if (j.contains("m")) c.m = read_sizes(j["m"], "m");
  read(j, "k", c.k);
  read(j, "trials", c.trials);
  read(j, "sigma2", c.sigma2);
  read(j, "train_count", c.train_count);
  read(j, "test_count", c.test_count);
  read(j, "support", c.support);
  read(j, "design", c.design);
  read(j, "learner", c.learner);
  read(j, "recovery", c.recovery);
  read(j, "lambda", c.lambda);
  read(j, "fista_iters", c.fista_iters);
  read(j, "seed", c.seed);
  read(j, "out", c.out);
  if (j.contains("design_cfg")) {
    const json& d = j["design_cfg"];
    read(d, "alpha", c.design_cfg.alpha);
    read(d, "beta", c.design_cfg.beta);
    read(d, "eta", c.design_cfg.eta);
    read(d, "max_iters", c.design_cfg.max_iters);
    read(d, "stop_rel_tol", c.design_cfg.stop_rel_tol);
    read(d, "separable_choice", c.separable_choice);
  }
  if (j.contains("learn_cfg")) {
    const json& l = j["learn_cfg"];
    read(l, "gamma", c.learn_cfg.gamma);
    read(l, "outer_iters", c.learn_cfg.outer_iters);
    read(l, "coupled", c.learn_cfg.coupled);
    read(l, "cksvd_gamma", c.cksvd_gamma);
  }
  if (j.contains("joint")) {
    const json& p = j["joint"];
    read(p, "images", c.joint.images);
    read(p, "synthetic_images", c.joint.synthetic_images);
    read(p, "image_size", c.joint.image_size);
    read(p, "test_images", c.joint.test_images);
    read(p, "patch", c.joint.patch);
    read(p, "patches_per_image", c.joint.patches_per_image);
    read(p, "validation_count", c.joint.validation_count);
    read(p, "max_iters", c.joint.max_iters);
    read(p, "tol_db", c.joint.tol_db);
  }
  if (j.contains("sweep")) c.sweep = j["sweep"];
  c.learn_cfg.sparsity_k = c.k;
  c.learn_cfg.seed = c.seed;
  c.design_cfg.seed = c.seed;
  c.validate();
  return c;
}

json parse_toml(const std::string& text) {
  json root = json::object();
  json* table = &root;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::string pending;  // multi-line arrays
  std::string pending_key;
  auto fail = [&](const std::string& msg) {
    throw InvalidArgument("TOML line " + std::to_string(line_no) + ": " + msg);
  };
  auto assign = [&](const std::string& key, const std::string& value_text) {
    json v;
    try {
      v = json::parse(toml_to_json_text(value_text));
    } catch (const json::exception&) {
      fail("cannot parse value '" + value_text + "'");
    }
    json* target = table;
    const auto parts = split_dotted(key);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) target = &(*target)[parts[i]];
    const std::string leaf = unquote_key(parts.back());
    if (target->contains(leaf)) fail("duplicate key '" + leaf + "'");
    (*target)[leaf] = std::move(v);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (!pending_key.empty()) {
      pending += ' ' + line;
      int depth = 0;
      for (char c : pending) depth += c == '[' ? 1 : c == ']' ? -1 : 0;
      if (depth == 0) {
        assign(pending_key, pending);
        pending_key.clear();
        pending.clear();
      }
      continue;
    }
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3 || line[1] == '[') fail("unsupported table header");
      table = &root;
      for (const auto& part : split_dotted(line.substr(1, line.size() - 2))) {
        json& next = (*table)[unquote_key(part)];
        if (next.is_null()) next = json::object();
        if (!next.is_object()) fail("table name clashes with a value");
        table = &next;
      }
      continue;
    }
    // Split at the first '=' outside quotes.
    std::size_t eq = std::string::npos;
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_str = !in_str;
      if (line[i] == '=' && !in_str) {
        eq = i;
        break;
      }
    }
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail("expected key = value");
    int depth = 0;
    for (char c : value) depth += c == '[' ? 1 : c == ']' ? -1 : 0;
    if (depth > 0) {
      pending_key = key;
      pending = value;
      continue;
    }
    assign(key, value);
  }
  if (!pending_key.empty()) fail("unterminated array for '" + pending_key + "'");
  return root;
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  if (path.extension() == ".toml") return parse_toml(ss.str());
  try {
    return json::parse(ss.str());
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + path.string() + ": " + e.what());
  }
}

std::vector<GridPoint> expand_grid(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::vector<json>>> axes;
  for (const auto& [key, values] : cfg.sweep.items()) {
    if (!values.is_array() || values.empty()) throw InvalidArgument("sweep '" + key + "' needs a non-empty list");
    axes.emplace_back(key, std::vector<json>(values.begin(), values.end()));
  }
  json base = to_json(cfg);
  base.erase("sweep");
  std::vector<GridPoint> grid;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    json j = base;
    GridPoint gp;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      json* target = &j;
      const auto parts = split_dotted(axes[a].first);
      for (std::size_t i = 0; i + 1 < parts.size(); ++i) target = &(*target)[parts[i]];
      (*target)[parts.back()] = axes[a].second[idx[a]];
      gp.params.emplace_back(axes[a].first, value_string(axes[a].second[idx[a]]));
    }
    gp.config = from_json(j);
    grid.push_back(std::move(gp));
    std::size_t a = 0;
    while (a < axes.size() && ++idx[a] == axes[a].second.size()) idx[a++] = 0;
    if (a == axes.size()) break;
  }
  return grid;
}

}  // namespace tensorcs::bench
