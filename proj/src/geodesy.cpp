// SPDX-License-Identifier: Apache-2.0
#include "leafseg/geodesy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>

#include "kdtree.hpp"
#include "leafseg/error.hpp"
#include "leafseg/parallel.hpp"
#include "leafseg/simd/kernels.hpp"
#include "text_io.hpp"

namespace leafseg {

std::vector<std::vector<std::pair<std::size_t, double>>> KnnGraph::adjacency() const {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n_vertices);
  for (const Edge& e : edges) {
    adj[e.u].emplace_back(e.v, e.length);
    adj[e.v].emplace_back(e.u, e.length);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

KnnGraph build_knn_graph(const PointCloud& cloud, int k, double tau) {
  if (cloud.empty()) throw InputError("build_knn_graph: empty cloud");
  if (k < 1) throw InputError("build_knn_graph: k must be >= 1");
  if (!(tau > 0.0)) throw InputError("build_knn_graph: tau must be > 0");
  KnnGraph graph;
  graph.n_vertices = cloud.size();
  graph.k = k;
  graph.tau = tau;

  const detail::KdTree tree(cloud.positions);
  const double max_sq = tau * tau * (1.0 + 1e-9);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (const auto& [sq, j] : tree.knn(i, static_cast<std::size_t>(k), max_sq)) {
      (void)sq;
      const double exact = distance(cloud.positions[i], cloud.positions[j]);
      if (exact > tau) continue;
      const double len = std::nearbyint(exact / kLengthQuantum) * kLengthQuantum;
      const std::size_t u = std::min(i, j);
      const std::size_t v = std::max(i, j);
      if (seen.emplace(u, v).second) graph.edges.push_back({u, v, len});
    }
  }
  std::sort(graph.edges.begin(), graph.edges.end(),
            [](const Edge& a, const Edge& b) { return a.u < b.u || (a.u == b.u && a.v < b.v); });
  return graph;
}

DistanceMatrix init_distance_matrix(const KnnGraph& graph) {
  DistanceMatrix d(graph.n_vertices, kUnreachable);
  for (std::size_t i = 0; i < graph.n_vertices; ++i) d(i, i) = 0.0;
  for (const Edge& e : graph.edges) {
    if (e.u == e.v) throw InputError("init_distance_matrix: self-loop at vertex " + std::to_string(e.u));
    d(e.u, e.v) = e.length;
    d(e.v, e.u) = e.length;
  }
  return d;
}

namespace {

void validate_pre_closure(const DistanceMatrix& d) {
  if (d.rows() != d.cols()) throw InputError("floyd_warshall: matrix must be square");
  const std::size_t n = d.size();
  for (std::size_t r = 0; r < n; ++r) {
    if (d(r, r) != 0.0) throw InputError("floyd_warshall: nonzero diagonal at " + std::to_string(r));
    for (std::size_t c = 0; c < n; ++c) {
      const double v = d(r, c);
      if (std::isnan(v) || v < 0.0) {
        throw InputError("floyd_warshall: negative or NaN entry at (" + std::to_string(r) + "," + std::to_string(c) + ")");
      }
      if (v != d(c, r)) {
        throw InputError("floyd_warshall: asymmetric entry at (" + std::to_string(r) + "," + std::to_string(c) + ")");
      }
    }
  }
}

// Opposite triangles can differ in the last bit because path sums are
// accumulated in opposite order; both are real path lengths, keep the shorter.
void symmetrize_min(Matrix& d) {
  const std::size_t n = d.rows();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = r + 1; c < n; ++c) {
      const double m = std::min(d(r, c), d(c, r));
      d(r, c) = m;
      d(c, r) = m;
    }
  }
}

struct Tile {
  std::size_t begin, end;
};

// Relaxes rows [rows) x columns [cols) through pivots [pivots), pivot-major.
// Used when the tile being updated shares rows or columns with the pivots.
void relax_pivot_major(double* a, std::size_t n, Tile rows, Tile cols, Tile pivots, const simd::KernelTable& kt) {
  const std::size_t len = cols.end - cols.begin;
  for (std::size_t k = pivots.begin; k < pivots.end; ++k) {
    const double* src = a + k * n + cols.begin;
    for (std::size_t i = rows.begin; i < rows.end; ++i) {
      const double bias = a[i * n + k];
      if (bias == kUnreachable) continue;
      kt.min_plus_row(a + i * n + cols.begin, src, bias, len);
    }
  }
}

// Same relaxation when pivots are disjoint from rows and columns, so the
// pivot entries are final and row-major order is legal.
void relax_row_major(double* a, std::size_t n, Tile rows, Tile cols, Tile pivots, const simd::KernelTable& kt) {
  const std::size_t len = cols.end - cols.begin;
  for (std::size_t i = rows.begin; i < rows.end; ++i) {
    double* dst = a + i * n + cols.begin;
    for (std::size_t k = pivots.begin; k < pivots.end; ++k) {
      const double bias = a[i * n + k];
      if (bias == kUnreachable) continue;
      kt.min_plus_row(dst, a + k * n + cols.begin, bias, len);
    }
  }
}

}  // namespace

DistanceMatrix floyd_warshall(const DistanceMatrix& input, const FloydWarshallOptions& options) {
  validate_pre_closure(input);
  if (options.block == 0) throw InputError("floyd_warshall: block must be >= 1");
  DistanceMatrix d = input;
  const std::size_t n = d.size();
  if (n <= 1) return d;
  const std::size_t block = options.block;
  const std::size_t nb = (n + block - 1) / block;
  const int threads = resolve_threads(options.threads);
  const simd::KernelTable& kt = simd::kernels();
  double* a = d.data().data();
  auto tile = [&](std::size_t b) { return Tile{b * block, std::min(n, (b + 1) * block)}; };

  for (std::size_t kb = 0; kb < nb; ++kb) {
    const Tile piv = tile(kb);
    relax_pivot_major(a, n, piv, piv, piv, kt);

    const auto others = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
    for (std::ptrdiff_t b = 0; b < others; ++b) {
      if (static_cast<std::size_t>(b) == kb) continue;
      const Tile t = tile(static_cast<std::size_t>(b));
      relax_pivot_major(a, n, piv, t, piv, kt);  // pivot row band
      relax_pivot_major(a, n, t, piv, piv, kt);  // pivot column band
    }

    const auto cells = static_cast<std::ptrdiff_t>(nb * nb);
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
    for (std::ptrdiff_t cell = 0; cell < cells; ++cell) {
      const std::size_t ib = static_cast<std::size_t>(cell) / nb;
      const std::size_t jb = static_cast<std::size_t>(cell) % nb;
      if (ib == kb || jb == kb) continue;
      relax_row_major(a, n, tile(ib), tile(jb), piv, kt);
    }
  }
  symmetrize_min(d);
  return d;
}

DistanceMatrix apsp_sparse(const KnnGraph& graph, int threads) {
  const std::size_t n = graph.n_vertices;
  DistanceMatrix d(n, kUnreachable);
  const auto adj = graph.adjacency();
  const int nthreads = resolve_threads(threads);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 8) num_threads(nthreads) if (nthreads > 1)
  for (std::ptrdiff_t s = 0; s < count; ++s) {
    auto row = d.row(static_cast<std::size_t>(s));
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    row[static_cast<std::size_t>(s)] = 0.0;
    queue.emplace(0.0, static_cast<std::size_t>(s));
    while (!queue.empty()) {
      const auto [dist, u] = queue.top();
      queue.pop();
      if (dist > row[u]) continue;
      for (const auto& [v, w] : adj[u]) {
        const double cand = dist + w;
        if (cand < row[v]) {
          row[v] = cand;
          queue.emplace(cand, v);
        }
      }
    }
  }
  symmetrize_min(d);
  return d;
}

DistanceMatrix euclidean_distance_matrix(const PointCloud& cloud) {
  if (cloud.empty()) throw InputError("euclidean_distance_matrix: empty cloud");
  const std::size_t n = cloud.size();
  DistanceMatrix d(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = r + 1; c < n; ++c) {
      const double v = distance(cloud.positions[r], cloud.positions[c]);
      d(r, c) = v;
      d(c, r) = v;
    }
  }
  return d;
}

SimilarityMatrix similarity_matrix(const DistanceMatrix& d, double epsilon) {
  if (!(epsilon > 0.0)) throw InputError("similarity_matrix: epsilon must be > 0");
  if (d.rows() != d.cols()) throw InputError("similarity_matrix: matrix must be square");
  const std::size_t n = d.size();
  SimilarityMatrix s(n);
  double max_value = 0.0;
  for (std::size_t i = 0; i < n * n; ++i) {
    const double v = d.data()[i];
    if (std::isnan(v) || v < 0.0) throw InputError("similarity_matrix: negative or NaN distance");
    const double inv = 1.0 / (v + epsilon);
    s.data()[i] = inv;
    max_value = std::max(max_value, inv);
  }
  if (max_value > 0.0) {
    for (double& v : s.data()) v /= max_value;
  }
  return s;
}

DistanceMethod distance_method_from_name(const std::string& name) {
  if (name == "fw") return DistanceMethod::floyd_warshall;
  if (name == "sparse") return DistanceMethod::sparse;
  if (name == "euclidean") return DistanceMethod::euclidean;
  throw InputError("unknown distance method '" + name + "' (expected fw, sparse or euclidean)");
}

DistanceMatrix distances_for(const PointCloud& cloud, DistanceMethod method, int k, double tau) {
  switch (method) {
    case DistanceMethod::floyd_warshall: return floyd_warshall(init_distance_matrix(build_knn_graph(cloud, k, tau)));
    case DistanceMethod::sparse: return apsp_sparse(build_knn_graph(cloud, k, tau));
    case DistanceMethod::euclidean: return euclidean_distance_matrix(cloud);
  }
  throw InputError("unknown distance method");
}

void save_graph(const KnnGraph& graph, const std::string& path) {
  std::string out = "u,v,length\n";
  for (const Edge& e : graph.edges) {
    detail::append_int(out, static_cast<std::int64_t>(e.u));
    out += ',';
    detail::append_int(out, static_cast<std::int64_t>(e.v));
    out += ',';
    detail::append_double(out, e.length);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeError(path + ": cannot open for writing");
  f << out;
  if (!f) throw RuntimeError(path + ": write failed");
}

}  // namespace leafseg
