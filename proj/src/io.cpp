#include "tensorcs/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace tensorcs::io {

namespace {

constexpr std::array<char, 4> kMagic{'T', 'N', 'S', 'R'};
constexpr std::uint8_t kVersion = 1;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &v, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&v, bytes.data(), sizeof(T));
  }
  return v;
}

template <typename T>
void put(std::ostream& os, T v) {
  v = byteswap_if_big(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw InvalidArgument("TNSR: truncated stream");
  return byteswap_if_big(v);
}

bool has_csv_extension(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".csv";
}

}  // namespace

void write_tnsr(std::ostream& os, const Tensor& t) {
  os.write(kMagic.data(), kMagic.size());
  put<std::uint8_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(t.order()));
  for (Index d : t.shape()) put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  for (Index i = 0; i < t.size(); ++i) put<double>(os, t[i]);
  if (!os) throw InvalidArgument("TNSR: write failed");
}

Tensor read_tnsr(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw InvalidArgument("TNSR: bad magic");
  const auto version = get<std::uint8_t>(is);
  if (version != kVersion) throw InvalidArgument("TNSR: unsupported version " + std::to_string(version));
  const auto order = get<std::uint32_t>(is);
  Shape shape(order);
  for (auto& d : shape) d = static_cast<Index>(get<std::uint32_t>(is));
  Tensor t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = get<double>(is);
  return t;
}

void save_tnsr(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path.string() + " for writing");
  write_tnsr(os, t);
}

Tensor load_tnsr(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path.string());
  return read_tnsr(is);
}

void save_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  if (has_csv_extension(path)) {
    std::ofstream os(path);
    if (!os) throw InvalidArgument("cannot open " + path.string() + " for writing");
    write_csv_matrix(os, m);
    return;
  }
  save_tnsr(path, Tensor::from_matrix(m));
}

Eigen::MatrixXd load_matrix(const std::filesystem::path& path) {
  if (has_csv_extension(path)) {
    std::ifstream is(path);
    if (!is) throw InvalidArgument("cannot open " + path.string());
    return read_csv_matrix(is);
  }
  const Tensor t = load_tnsr(path);
  if (t.order() != 2) throw InvalidArgument(path.string() + ": expected an order-2 tensor");
  return t.as_matrix();
}

void write_csv_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  std::ostringstream line;
  line.precision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    line.str("");
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) line << ',';
      line << m(i, j);
    }
    os << line.str() << '\n';
  }
}

Eigen::MatrixXd read_csv_matrix(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw InvalidArgument("CSV: cannot parse '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw InvalidArgument("CSV: ragged rows");
    rows.push_back(std::move(row));
  }
  const Index r = static_cast<Index>(rows.size());
  const Index c = r ? static_cast<Index>(rows.front().size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rows[i][j];
  return m;
}

}  // namespace tensorcs::io
