// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "leafseg/cloud.hpp"
#include "leafseg/matrix.hpp"

namespace leafseg {

struct Edge {
  std::size_t u = 0;  // u < v
  std::size_t v = 0;
  double length = 0.0;  // m

  bool operator==(const Edge&) const = default;
};

/// Undirected neighbor graph over the points of a cloud.
///
/// Built from the directed k-nearest-neighbor relation restricted to pairs
/// closer than tau, then symmetrized by union. Edges are sorted by (u, v).
/// Lengths are rounded to multiples of kLengthQuantum so that every path sum
/// below 2^12 m is exact in double precision: shortest paths then do not
/// depend on summation order, Floyd-Warshall is idempotent and agrees
/// bitwise with Dijkstra.
struct KnnGraph {
  std::size_t n_vertices = 0;
  std::vector<Edge> edges;
  int k = 7;
  double tau = 0.02;  // m

  /// Neighbor lists with edge lengths, per vertex, sorted by neighbor index.
  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency() const;
};

/// 2^-40 m, about 1e-12 m.
inline constexpr double kLengthQuantum = 0x1p-40;

/// Defaults used throughout: 7 neighbors, 2 cm.
inline constexpr int kDefaultK = 7;
inline constexpr double kDefaultTau = 0.02;

KnnGraph build_knn_graph(const PointCloud& cloud, int k = kDefaultK, double tau = kDefaultTau);

/// Zero diagonal, edge lengths where an edge exists, kUnreachable elsewhere.
DistanceMatrix init_distance_matrix(const KnnGraph& graph);

struct FloydWarshallOptions {
  std::size_t block = 64;  // tile edge length, in entries
  int threads = 0;         // 0 = thread_limit()
};

/// All-pairs shortest-path closure with a three-phase tiled Floyd-Warshall.
///
/// The diagonal tile of each round is closed first, then the tiles sharing
/// its row or column, then every remaining tile; the last two phases run in
/// parallel over tiles. Each tile is updated by the same fixed sequence of
/// operations whatever the thread count, so output is bitwise reproducible
/// for a given block size. A final pass takes min(d[r][c], d[c][r]) so the
/// result is exactly symmetric. Throws InputError for asymmetric, negative
/// or NaN input and for block == 0.
DistanceMatrix floyd_warshall(const DistanceMatrix& d, const FloydWarshallOptions& options = {});

/// Same closure via one Dijkstra run per source over the sparse graph.
DistanceMatrix apsp_sparse(const KnnGraph& graph, int threads = 0);

/// Dense pairwise Euclidean distances.
DistanceMatrix euclidean_distance_matrix(const PointCloud& cloud);

inline constexpr double kDefaultEpsilon = 1e-8;

/// S = (1 / (D + eps)) / max(1 / (D + eps)). With a zero diagonal the max is
/// 1/eps, so S[r][c] = eps / (D[r][c] + eps); unreachable pairs map to 0.
SimilarityMatrix similarity_matrix(const DistanceMatrix& d, double epsilon = kDefaultEpsilon);

enum class DistanceMethod { floyd_warshall, sparse, euclidean };

DistanceMethod distance_method_from_name(const std::string& name);

/// Convenience: graph + closure, or the Euclidean matrix.
DistanceMatrix distances_for(const PointCloud& cloud, DistanceMethod method, int k = kDefaultK,
                             double tau = kDefaultTau);

/// Edge list CSV with header `u,v,length`.
void save_graph(const KnnGraph& graph, const std::string& path);

}  // namespace leafseg
