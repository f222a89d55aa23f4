#include "tensorcs/bench/images.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

#include "tensorcs/errors.hpp"

namespace tensorcs::bench {

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& is) {
  std::string tok;
  char c;
  while (is.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(is, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

Index parse_dim(const std::string& tok, const char* what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return static_cast<Index>(v);
  } catch (const std::exception&) {
    throw InvalidArgument(std::string("PGM: bad ") + what + " '" + tok + "'");
  }
}

}  // namespace

GrayImage read_pgm(std::istream& is) {
  const std::string magic = pgm_token(is);
  if (magic != "P5") throw InvalidArgument("PGM: only binary 8-bit grayscale (P5) is supported, got '" + magic + "'");
  const Index cols = parse_dim(pgm_token(is), "width");
  const Index rows = parse_dim(pgm_token(is), "height");
  const Index maxval = parse_dim(pgm_token(is), "maxval");
  if (maxval > 255) throw InvalidArgument("PGM: 16-bit images are not supported");
  if (maxval < 2) throw InvalidArgument("PGM: 1-bit images are not supported");
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows * cols));
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (is.gcount() != static_cast<std::streamsize>(buf.size())) throw InvalidArgument("PGM: truncated pixel data");
  GrayImage img;
  img.pixels.resize(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) img.pixels(r, c) = buf[r * cols + c] / static_cast<double>(maxval);
  return img;
}

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  GrayImage img = read_pgm(in);
  img.name = path.filename().string();
  return img;
}

void write_pgm(std::ostream& os, const GrayImage& img) {
  os << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  for (Index r = 0; r < img.rows(); ++r)
    for (Index c = 0; c < img.cols(); ++c) {
      const double v = std::clamp(img.pixels(r, c), 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
}

void save_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  write_pgm(out, img);
}

std::vector<GrayImage> load_pgm_corpus(const std::filesystem::path& dir, std::ostream& warnings) {
  if (!std::filesystem::is_directory(dir)) throw InvalidArgument("image directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<GrayImage> out;
  for (const auto& f : files) {
    try {
      out.push_back(load_pgm(f));
    } catch (const std::exception& e) {
      warnings << "warning: skipping " << f.string() << ": " << e.what() << '\n';
    }
  }
  if (out.empty()) throw InvalidArgument("no usable PGM images in " + dir.string());
  return out;
}

GrayImage synthetic_image(Index rows, Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  Eigen::MatrixXd img(rows, cols);
  // Smooth background gradient.
  const double a = u(rng), bx = u(rng) - 0.5, by = u(rng) - 0.5;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      img(r, c) = 0.2 + 0.4 * a + 0.3 * (bx * c / static_cast<double>(cols) + by * r / static_cast<double>(rows));
  // Flat-shaded discs and rectangles give sharp edges.
  const int shapes = 6 + static_cast<int>(u(rng) * 6);
  for (int s = 0; s < shapes; ++s) {
    const double level = u(rng) - 0.5;
    const double cr = u(rng) * rows, cc = u(rng) * cols;
    const double rad = (0.08 + 0.25 * u(rng)) * std::min(rows, cols);
    const bool disc = u(rng) < 0.5;
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) {
        const double dr = r - cr, dc = c - cc;
        const bool inside = disc ? dr * dr + dc * dc < rad * rad : std::abs(dr) < rad && std::abs(dc) < 0.6 * rad;
        if (inside) img(r, c) += 0.5 * level;
      }
  }
  // Oriented sinusoidal texture in one region.
  const double fr = 0.2 + 0.6 * u(rng), theta = u(rng) * std::numbers::pi;
  const double tr = u(rng) * rows, tc = u(rng) * cols, trad = 0.3 * std::min(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      const double dr = r - tr, dc = c - tc;
      if (dr * dr + dc * dc < trad * trad)
        img(r, c) += 0.1 * std::sin(fr * (c * std::cos(theta) + r * std::sin(theta)));
    }
  for (Index i = 0; i < img.size(); ++i) img.data()[i] += 0.005 * g(rng);
  GrayImage out;
  out.pixels = img.cwiseMax(0.0).cwiseMin(1.0);
  out.name = "synthetic";
  return out;
}

Tensor random_patches(const std::vector<GrayImage>& images, Index patch, Index per_image, std::mt19937_64& rng) {
  if (patch < 1 || per_image < 0) throw InvalidArgument("invalid patch size or count");
  std::vector<const GrayImage*> usable;
  for (const auto& img : images)
    if (img.rows() >= patch && img.cols() >= patch) usable.push_back(&img);
  const Index count = per_image * static_cast<Index>(usable.size());
  Tensor out({patch, patch, count});
  const Index len = patch * patch;
  Index t = 0;
  for (const GrayImage* img : usable) {
    std::uniform_int_distribution<Index> pr(0, img->rows() - patch), pc(0, img->cols() - patch);
    for (Index i = 0; i < per_image; ++i, ++t) {
      const Index r0 = pr(rng), c0 = pc(rng);
      Eigen::Map<Eigen::MatrixXd>(out.data().data() + t * len, patch, patch) = img->pixels.block(r0, c0, patch, patch);
    }
  }
  return out;
}

Tensor tile_patches(const GrayImage& img, Index patch) { return tile_patches(std::vector<GrayImage>{img}, patch); }

Tensor tile_patches(const std::vector<GrayImage>& images, Index patch) {
  if (patch < 1) throw InvalidArgument("invalid patch size");
  Index count = 0;
  for (const auto& img : images) count += (img.rows() / patch) * (img.cols() / patch);
  Tensor out({patch, patch, count});
  const Index len = patch * patch;
  Index t = 0;
  for (const auto& img : images)
    for (Index r = 0; r + patch <= img.rows(); r += patch)
      for (Index c = 0; c + patch <= img.cols(); c += patch, ++t)
        Eigen::Map<Eigen::MatrixXd>(out.data().data() + t * len, patch, patch) = img.pixels.block(r, c, patch, patch);
  return out;
}

GrayImage untile_patches(const Tensor& tiles, Index rows, Index cols) {
  if (tiles.order() != 3 || tiles.dim(0) != tiles.dim(1)) throw InvalidArgument("expected a patch x patch x T stack");
  const Index patch = tiles.dim(0);
  const Index tr = rows / patch, tc = cols / patch;
  if (tr * tc != tiles.dim(2)) throw InvalidArgument("tile count does not match the image size");
  GrayImage img;
  img.pixels.resize(tr * patch, tc * patch);
  const Index len = patch * patch;
  Index t = 0;
  for (Index r = 0; r < tr; ++r)
    for (Index c = 0; c < tc; ++c, ++t)
      img.pixels.block(r * patch, c * patch, patch, patch) =
          Eigen::Map<const Eigen::MatrixXd>(tiles.data().data() + t * len, patch, patch);
  return img;
}

Eigen::MatrixXd overcomplete_dct(Index n, Index n_hat) {
  if (n < 1 || n_hat < 1) throw InvalidArgument("DCT sizes must be positive");
  Eigen::MatrixXd d(n, n_hat);
  for (Index k = 0; k < n_hat; ++k) {
    for (Index i = 0; i < n; ++i) d(i, k) = std::cos(std::numbers::pi * static_cast<double>(i * k) / n_hat);
    if (k > 0) d.col(k).array() -= d.col(k).mean();
    const double norm = d.col(k).norm();
    if (norm > 0) d.col(k) /= norm;
  }
  return d;
}

}  // namespace tensorcs::bench
