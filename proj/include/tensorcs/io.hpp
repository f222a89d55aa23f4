#pragma once

// TNSR binary files and plain-text CSV matrices.
//
// TNSR layout (all little-endian):
//   "TNSR" | u8 version (=1) | u32 order n | n x u32 dims | f64 data
// with data in canonical order (mode-0 index fastest). Matrices are stored
// as order-2 tensors.

#include <filesystem>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

#include "tensorcs/tensor.hpp"

namespace tensorcs::io {

void write_tnsr(std::ostream& os, const Tensor& t);
Tensor read_tnsr(std::istream& is);

void save_tnsr(const std::filesystem::path& path, const Tensor& t);
Tensor load_tnsr(const std::filesystem::path& path);

void save_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
// Accepts TNSR (order 2) or CSV, chosen by file extension (.csv = CSV).
Eigen::MatrixXd load_matrix(const std::filesystem::path& path);

// One matrix row per line, comma separated, full round-trip precision.
void write_csv_matrix(std::ostream& os, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_csv_matrix(std::istream& is);

}  // namespace tensorcs::io
