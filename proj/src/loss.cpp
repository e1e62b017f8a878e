// SPDX-License-Identifier: Apache-2.0
#include "leafseg/loss.hpp"

#include <cmath>

#include "leafseg/error.hpp"
#include "leafseg/parallel.hpp"
#include "leafseg/rng.hpp"
#include "leafseg/simd/kernels.hpp"

namespace leafseg {

void LossConfig::validate() const {
  if (n_views != 1 && n_views != 2) throw InputError("loss: n_views must be 1 or 2");
  if (n_points < 1) throw InputError("loss: n_points must be >= 1");
  if (!(epsilon > 0.0)) throw InputError("loss: epsilon must be > 0");
  if (k < 1) throw InputError("loss: k must be >= 1");
  if (!(tau > 0.0)) throw InputError("loss: tau must be > 0");
}

TargetKind target_kind_from_name(const std::string& name) {
  if (name == "identity" || name == "point-to-point") return TargetKind::identity;
  if (name == "euclidean") return TargetKind::euclidean;
  if (name == "graph") return TargetKind::graph;
  throw InputError("unknown target '" + name + "' (expected identity, euclidean or graph)");
}

Discrepancy discrepancy_from_name(const std::string& name) {
  if (name == "squared") return Discrepancy::squared;
  if (name == "absolute") return Discrepancy::absolute;
  if (name == "literal") return Discrepancy::literal;
  throw InputError("unknown discrepancy '" + name + "' (expected squared, absolute or literal)");
}

std::string to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::identity: return "identity";
    case TargetKind::euclidean: return "euclidean";
    case TargetKind::graph: return "graph";
  }
  return "?";
}

std::string to_string(Discrepancy kind) {
  switch (kind) {
    case Discrepancy::squared: return "squared";
    case Discrepancy::absolute: return "absolute";
    case Discrepancy::literal: return "literal";
  }
  return "?";
}

Embeddings normalize_embeddings(const Embeddings& e) {
  const auto& kt = simd::kernels();
  Embeddings out = e;
  for (std::size_t i = 0; i < e.rows(); ++i) {
    auto row = out.row(i);
    const double nrm = std::sqrt(kt.dot(row.data(), row.data(), row.size()));
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
      throw InputError("normalize_embeddings: row " + std::to_string(i) + " has zero or non-finite norm");
    }
    for (double& v : row) v /= nrm;
  }
  return out;
}

Matrix cross_similarity(const Embeddings& e0, const Embeddings& e1) {
  if (e0.rows() != e1.rows() || e0.dim() != e1.dim()) {
    throw InputError("cross_similarity: shape mismatch (" + std::to_string(e0.rows()) + "x" + std::to_string(e0.dim()) +
                     " vs " + std::to_string(e1.rows()) + "x" + std::to_string(e1.dim()) + ")");
  }
  const auto& kt = simd::kernels();
  const std::size_t n = e0.rows();
  const std::size_t dim = e0.dim();
  Matrix c(n, n);
  const int threads = resolve_threads(0);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1 && n > 256)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const double* a = e0.row(static_cast<std::size_t>(i)).data();
    auto out = c.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < n; ++j) out[j] = kt.dot(a, e1.row(j).data(), dim);
  }
  return c;
}

SimilarityMatrix build_target(const PointCloud& view, const LossConfig& config) {
  config.validate();
  switch (config.target) {
    case TargetKind::identity: {
      SimilarityMatrix t(view.size());
      for (std::size_t i = 0; i < view.size(); ++i) t(i, i) = 1.0;
      return t;
    }
    case TargetKind::euclidean:
      return similarity_matrix(euclidean_distance_matrix(view), config.epsilon);
    case TargetKind::graph:
      return similarity_matrix(floyd_warshall(init_distance_matrix(build_knn_graph(view, config.k, config.tau))),
                               config.epsilon);
  }
  throw InputError("unknown target kind");
}

namespace {

struct Prepared {
  std::vector<Embeddings> normalized;
  Matrix c;
};

Prepared prepare(std::span<const Embeddings> views, const SimilarityMatrix& target, const LossConfig& config) {
  config.validate();
  if (static_cast<int>(views.size()) != config.n_views) {
    throw InputError("loss: expected " + std::to_string(config.n_views) + " view(s), got " + std::to_string(views.size()));
  }
  for (const auto& v : views) {
    for (double x : v.data()) {
      if (!std::isfinite(x)) throw InputError("loss: non-finite embedding entry");
    }
    if (v.rows() != target.size()) {
      throw InputError("loss: embeddings have " + std::to_string(v.rows()) + " rows but target is " +
                       std::to_string(target.size()) + "x" + std::to_string(target.size()));
    }
  }
  Prepared p;
  for (const auto& v : views) p.normalized.push_back(normalize_embeddings(v));
  p.c = cross_similarity(p.normalized.front(), p.normalized.back());
  return p;
}

double entry_count(std::size_t n, const LossConfig& config) {
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  return config.mask_diagonal ? nn - static_cast<double>(n) : nn;
}

double scale_of(std::size_t n, const LossConfig& config) {
  if (config.reduction == Reduction::sum) return 1.0;
  const double count = entry_count(n, config);
  return count > 0.0 ? 1.0 / count : 0.0;
}

double penalty(double x, Discrepancy kind) {
  switch (kind) {
    case Discrepancy::squared: return x * x;
    case Discrepancy::absolute: return std::abs(x);
    case Discrepancy::literal: return x;
  }
  return 0.0;
}

double penalty_slope(double x, Discrepancy kind) {
  switch (kind) {
    case Discrepancy::squared: return 2.0 * x;
    case Discrepancy::absolute: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    case Discrepancy::literal: return 1.0;
  }
  return 0.0;
}

}  // namespace

double contrastive_loss(std::span<const Embeddings> views, const SimilarityMatrix& target, const LossConfig& config) {
  const Prepared p = prepare(views, target, config);
  const std::size_t n = target.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (config.mask_diagonal && i == j) continue;
      row_sum += penalty(target(i, j) - p.c(i, j), config.discrepancy);
    }
    total += row_sum;
  }
  return total * scale_of(n, config);
}

std::vector<Embeddings> loss_gradient(std::span<const Embeddings> views, const SimilarityMatrix& target,
                                      const LossConfig& config) {
  const Prepared p = prepare(views, target, config);
  const auto& kt = simd::kernels();
  const std::size_t n = target.size();
  const double scale = scale_of(n, config);

  // dL/dC
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (config.mask_diagonal && i == j) continue;
      g(i, j) = -scale * penalty_slope(target(i, j) - p.c(i, j), config.discrepancy);
    }
  }

  const Embeddings& u0 = p.normalized.front();
  const Embeddings& u1 = p.normalized.back();
  const std::size_t dim = u0.dim();
  // Gradients with respect to the normalized rows.
  std::vector<Embeddings> grad_unit;
  grad_unit.emplace_back(n, dim);
  if (views.size() == 2) grad_unit.emplace_back(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    double* g0 = grad_unit[0].row(i).data();
    for (std::size_t j = 0; j < n; ++j) {
      if (views.size() == 1) {
        // C = U U^T: row i appears both as the left and the right factor.
        kt.axpy(g(i, j) + g(j, i), u0.row(j).data(), g0, dim);
      } else {
        kt.axpy(g(i, j), u1.row(j).data(), g0, dim);
        kt.axpy(g(j, i), u0.row(j).data(), grad_unit[1].row(i).data(), dim);
      }
    }
  }

  // Back through e / |e|: (g - u <u, g>) / |e|.
  std::vector<Embeddings> out;
  for (std::size_t v = 0; v < views.size(); ++v) {
    Embeddings r(n, dim);
    const Embeddings& unit = p.normalized[v];
    for (std::size_t i = 0; i < n; ++i) {
      const auto raw = views[v].row(i);
      const double nrm = std::sqrt(kt.dot(raw.data(), raw.data(), dim));
      const auto gu = grad_unit[v].row(i);
      const auto u = unit.row(i);
      const double proj = kt.dot(u.data(), gu.data(), dim);
      auto dst = r.row(i);
      for (std::size_t d = 0; d < dim; ++d) dst[d] = (gu[d] - u[d] * proj) / nrm;
    }
    out.push_back(std::move(r));
  }
  return out;
}

OptimizeResult optimize_embeddings(const PointCloud& cloud, const LossConfig& config, const OptimizeOptions& options) {
  config.validate();
  if (cloud.size() < 2) throw InputError("optimize_embeddings: need at least 2 points");
  if (options.dim < 1) throw InputError("optimize_embeddings: dim must be >= 1");
  if (options.steps < 0) throw InputError("optimize_embeddings: steps must be >= 0");
  if (!std::isfinite(options.learning_rate) || options.learning_rate < 0.0) {
    throw InputError("optimize_embeddings: learning_rate must be finite and >= 0");
  }
  LossConfig cfg = config;
  cfg.n_views = 1;
  const SimilarityMatrix target = build_target(cloud, cfg);

  Rng rng(options.seed);
  Embeddings e(cloud.size(), options.dim);
  for (double& v : e.data()) v = rng.uniform(-0.1, 0.1);
  // A zero row is a measure-zero draw; nudge it instead of failing.
  for (std::size_t i = 0; i < e.rows(); ++i) {
    bool zero = true;
    for (double v : e.row(i)) zero = zero && v == 0.0;
    if (zero) e(i, 0) = 0.1;
  }
  e = normalize_embeddings(e);

  OptimizeResult result;
  for (int step = 0; step < options.steps; ++step) {
    const std::span<const Embeddings> view(&e, 1);
    result.loss_trace.push_back(contrastive_loss(view, target, cfg));
    const auto grad = loss_gradient(view, target, cfg);
    const auto& kt = simd::kernels();
    kt.axpy(-options.learning_rate, grad[0].data().data(), e.data().data(), e.data().size());
    // Rows whose squared norm overflows (or collapses) cannot be normalized next step.
    for (std::size_t i = 0; i < e.rows(); ++i) {
      const double sq = kt.dot(e.row(i).data(), e.row(i).data(), e.dim());
      if (!std::isfinite(sq) || !(sq > 0.0)) {
        throw RuntimeError("optimize_embeddings: embeddings diverged at step " + std::to_string(step));
      }
    }
  }
  const std::span<const Embeddings> view(&e, 1);
  result.loss_trace.push_back(contrastive_loss(view, target, cfg));
  result.embeddings = std::move(e);
  return result;
}

}  // namespace leafseg
