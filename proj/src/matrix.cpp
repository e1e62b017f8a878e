// SPDX-License-Identifier: Apache-2.0
#include "leafseg/matrix.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "leafseg/error.hpp"
#include "text_io.hpp"

namespace leafseg {
namespace {

constexpr char kMagic[4] = {'L', 'S', 'M', 'X'};

static_assert(std::endian::native == std::endian::little, "binary matrix I/O assumes a little-endian host");

void save_csv(const Matrix& m, const std::string& path) {
  std::string out;
  out.reserve(m.rows() * m.cols() * 12);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      detail::append_double(out, m(r, c));
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeError(path + ": cannot open for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw RuntimeError(path + ": write failed");
}

Matrix load_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError(path + ": cannot open for reading");
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto tok = detail::split(line, ',');
    if (rows == 0) {
      cols = tok.size();
    } else if (tok.size() != cols) {
      throw InputError(detail::where(path, line_no) + "expected " + std::to_string(cols) + " columns, found " +
                       std::to_string(tok.size()));
    }
    for (auto t : tok) {
      const double v = detail::parse_double(t, path, line_no);
      if (std::isnan(v)) throw InputError(detail::where(path, line_no) + "NaN entry");
      values.push_back(v);
    }
    ++rows;
  }
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data().begin());
  return m;
}

void save_binary(const Matrix& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeError(path + ": cannot open for writing");
  const auto cols = static_cast<std::uint32_t>(m.cols());
  const auto rows = static_cast<std::uint64_t>(m.rows());
  f.write(kMagic, 4);
  f.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  f.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  f.write(reinterpret_cast<const char*>(m.data().data()), static_cast<std::streamsize>(m.data().size_bytes()));
  if (!f) throw RuntimeError(path + ": write failed");
}

Matrix load_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError(path + ": cannot open for reading");
  char magic[4];
  std::uint32_t cols = 0;
  std::uint64_t rows = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&cols), sizeof cols);
  f.read(reinterpret_cast<char*>(&rows), sizeof rows);
  if (!f || std::memcmp(magic, kMagic, 4) != 0) throw InputError(path + ": not a binary matrix file");
  Matrix m(rows, cols);
  f.read(reinterpret_cast<char*>(m.data().data()), static_cast<std::streamsize>(m.data().size_bytes()));
  if (!f) throw InputError(path + ": truncated binary matrix");
  return m;
}

}  // namespace

MatrixFormat matrix_format_from_path(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot != std::string::npos) {
    const std::string ext = path.substr(dot);
    if (ext == ".bin" || ext == ".raw") return MatrixFormat::binary;
  }
  return MatrixFormat::csv;
}

void save_matrix(const Matrix& m, const std::string& path, MatrixFormat format) {
  if (format == MatrixFormat::csv) {
    save_csv(m, path);
  } else {
    save_binary(m, path);
  }
}

Matrix load_matrix(const std::string& path, MatrixFormat format) {
  return format == MatrixFormat::csv ? load_csv(path) : load_binary(path);
}

DistanceMatrix as_distance_matrix(Matrix m) {
  if (m.rows() != m.cols()) throw InputError("distance matrix must be square");
  DistanceMatrix d(m.rows());
  std::copy(m.data().begin(), m.data().end(), d.data().begin());
  return d;
}

Embeddings as_embeddings(Matrix m) {
  Embeddings e(m.rows(), m.cols());
  std::copy(m.data().begin(), m.data().end(), e.data().begin());
  return e;
}

}  // namespace leafseg
