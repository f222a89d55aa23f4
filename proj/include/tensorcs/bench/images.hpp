#pragma once

// Grayscale images, 8-bit PGM I/O, patch extraction and the overcomplete
// DCT used to initialize separable dictionaries.

#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tensorcs/tensor.hpp"

namespace tensorcs::bench {

struct GrayImage {
  Eigen::MatrixXd pixels;  // rows x cols, values in [0, 1]
  std::string name;

  Index rows() const { return pixels.rows(); }
  Index cols() const { return pixels.cols(); }
};

// Binary P5 with maxval <= 255. Anything else throws InvalidArgument.
GrayImage read_pgm(std::istream& is);
GrayImage load_pgm(const std::filesystem::path& path);
void write_pgm(std::ostream& os, const GrayImage& img);
void save_pgm(const std::filesystem::path& path, const GrayImage& img);

// Loads every *.pgm in `dir` (sorted by name). Unreadable files are skipped
// with a warning on `warnings`; an empty result throws InvalidArgument.
std::vector<GrayImage> load_pgm_corpus(const std::filesystem::path& dir, std::ostream& warnings);

// Smooth piecewise images with edges, gradients and texture, in [0, 1].
GrayImage synthetic_image(Index rows, Index cols, std::mt19937_64& rng);

// `per_image` random patch x patch windows from each image, as a
// patch x patch x T stack (mode 0 = image rows).
Tensor random_patches(const std::vector<GrayImage>& images, Index patch, Index per_image, std::mt19937_64& rng);

// Non-overlapping tiling in row-major tile order; partial border tiles are
// dropped.
Tensor tile_patches(const GrayImage& img, Index patch);
Tensor tile_patches(const std::vector<GrayImage>& images, Index patch);
// Inverse of tile_patches for one image: returns the cropped image.
GrayImage untile_patches(const Tensor& tiles, Index rows, Index cols);

// n x n_hat overcomplete DCT: atom k samples cos(pi k i / n_hat), the mean
// is removed for k > 0 and every atom is normalized.
Eigen::MatrixXd overcomplete_dct(Index n, Index n_hat);

}  // namespace tensorcs::bench
