// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace leafseg {

/// Marker for "no path" entries. IEEE infinity saturates under addition,
/// which is exactly the shortest-path semantics we need.
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Square matrix of non-negative distances; kUnreachable marks disconnected pairs.
class DistanceMatrix : public Matrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n, double fill = 0.0) : Matrix(n, n, fill) {}
  std::size_t size() const { return rows(); }
};

/// Square matrix of target similarities in [0, 1].
class SimilarityMatrix : public Matrix {
 public:
  SimilarityMatrix() = default;
  explicit SimilarityMatrix(std::size_t n, double fill = 0.0) : Matrix(n, n, fill) {}
  std::size_t size() const { return rows(); }
};

/// Per-point embeddings, one row per point.
class Embeddings : public Matrix {
 public:
  Embeddings() = default;
  Embeddings(std::size_t n, std::size_t dim, double fill = 0.0) : Matrix(n, dim, fill) {}
  std::size_t dim() const { return cols(); }
};

// Serialization. CSV is row-major without a header and writes `inf` for
// unreachable entries. The binary form is little-endian: a 4-byte magic,
// uint32 column count, uint64 row count, then rows*cols float64 values.
enum class MatrixFormat { csv, binary };

MatrixFormat matrix_format_from_path(const std::string& path);

void save_matrix(const Matrix& m, const std::string& path, MatrixFormat format);
Matrix load_matrix(const std::string& path, MatrixFormat format);

DistanceMatrix as_distance_matrix(Matrix m);
Embeddings as_embeddings(Matrix m);

}  // namespace leafseg
