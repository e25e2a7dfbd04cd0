#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "uzawa/error.hpp"
#include "uzawa/linalg/csr_matrix.hpp"
#include "uzawa/linalg/vector.hpp"

namespace uzawa::io {

enum class MatrixSymmetry { general, symmetric };

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ofstream out(path, std::ios::out | std::ios::trunc | mode);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ifstream in(path, std::ios::in | mode);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

}  // namespace detail

/// Reads a real Matrix Market coordinate file ("general" or "symmetric").
inline CsrMatrix read_matrix_market(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || detail::lower(object) != "matrix" ||
      detail::lower(format) != "coordinate")
    throw IoError(path.string() + ": not a Matrix Market coordinate file");
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  if (field != "real" && field != "integer" && field != "double")
    throw IoError(path.string() + ": unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw IoError(path.string() + ": unsupported symmetry '" + symmetry + "'");
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream header(line);
  std::size_t rows = 0, cols = 0, entries = 0;
  if (!(header >> rows >> cols >> entries)) throw IoError(path.string() + ": bad size line");
  std::vector<Triplet> trips;
  trips.reserve(symmetry == "symmetric" ? 2 * entries : entries);
  for (std::size_t k = 0; k < entries; ++k) {
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v)) throw IoError(path.string() + ": truncated entry list");
    if (i == 0 || j == 0 || i > rows || j > cols)
      throw IoError(path.string() + ": entry index out of range");
    trips.push_back({i - 1, j - 1, v});
    if (symmetry == "symmetric" && i != j) trips.push_back({j - 1, i - 1, v});
  }
  return CsrMatrix::from_triplets(rows, cols, std::move(trips));
}

/// Writes A in coordinate format; `symmetric` stores only the lower triangle.
inline void write_matrix_market(const std::filesystem::path& path, const CsrMatrix& A,
                                MatrixSymmetry symmetry = MatrixSymmetry::general) {
  if (symmetry == MatrixSymmetry::symmetric && (!A.square() || asymmetry(A) != 0.0))
    throw IoError("write_matrix_market: matrix is not exactly symmetric");
  auto out = detail::open_out(path);
  std::size_t count = 0;
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j : A.row_cols(i))
      if (symmetry == MatrixSymmetry::general || j <= i) ++count;
  out << "%%MatrixMarket matrix coordinate real "
      << (symmetry == MatrixSymmetry::general ? "general" : "symmetric") << "\n";
  out << A.rows() << " " << A.cols() << " " << count << "\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    auto c = A.row_cols(i);
    auto v = A.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k)
      if (symmetry == MatrixSymmetry::general || c[k] <= i)
        out << i + 1 << " " << c[k] + 1 << " " << v[k] << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline constexpr char kVectorMagic[6] = {'U', 'Z', 'V', 'E', 'C', '1'};

/// Binary vector file: "UZVEC1", u64 length, f64 entries, all little-endian.
inline void write_vector_binary(const std::filesystem::path& path, std::span<const double> x) {
  static_assert(std::endian::native == std::endian::little,
                "binary vector I/O assumes a little-endian host");
  auto out = detail::open_out(path, std::ios::binary);
  out.write(kVectorMagic, sizeof(kVectorMagic));
  const std::uint64_t n = x.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(x.data()),
            static_cast<std::streamsize>(x.size() * sizeof(double)));
  if (!out) throw IoError("write failed: " + path.string());
}

inline Vector read_vector_binary(const std::filesystem::path& path) {
  auto in = detail::open_in(path, std::ios::binary);
  char magic[sizeof(kVectorMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kVectorMagic, sizeof(magic)) != 0)
    throw IoError(path.string() + ": missing UZVEC1 header");
  std::uint64_t n = 0;
  if (!in.read(reinterpret_cast<char*>(&n), sizeof(n)))
    throw IoError(path.string() + ": truncated header");
  Vector x(n);
  if (!in.read(reinterpret_cast<char*>(x.data()), static_cast<std::streamsize>(n * sizeof(double))))
    throw IoError(path.string() + ": truncated payload");
  return x;
}

/// Plain text: one value per line, full round-trip precision.
inline void write_vector_text(const std::filesystem::path& path, std::span<const double> x) {
  auto out = detail::open_out(path);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (double v : x) out << v << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

inline Vector read_vector_text(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  Vector x;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      x.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw IoError(path.string() + ": bad number '" + tok + "'");
    }
  }
  return x;
}

/// Picks the reader by content: binary files start with the magic bytes.
inline Vector read_vector(const std::filesystem::path& path) {
  auto in = detail::open_in(path, std::ios::binary);
  char magic[sizeof(kVectorMagic)] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() == sizeof(magic) && std::memcmp(magic, kVectorMagic, sizeof(magic)) == 0)
    return read_vector_binary(path);
  return read_vector_text(path);
}

}  // namespace uzawa::io
