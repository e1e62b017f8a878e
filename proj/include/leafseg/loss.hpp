// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "leafseg/cloud.hpp"
#include "leafseg/geodesy.hpp"
#include "leafseg/matrix.hpp"

namespace leafseg {

enum class TargetKind { identity, euclidean, graph };

/// How each entry's mismatch T - C enters the loss.
///
/// The printed objective sums T - C directly, which is unbounded below
/// (C only needs to grow). `squared` is the default and the only mode that
/// has a proper minimum at C = T; `absolute` and `literal` are kept for
/// comparison runs.
enum class Discrepancy { squared, absolute, literal };

enum class Reduction { mean, sum };

struct LossConfig {
  TargetKind target = TargetKind::graph;
  int n_views = 1;
  Discrepancy discrepancy = Discrepancy::squared;
  Reduction reduction = Reduction::mean;  // mean divides by N^2
  bool mask_diagonal = false;
  std::size_t n_points = 10000;  // loss subsample size
  double epsilon = kDefaultEpsilon;
  int k = kDefaultK;
  double tau = kDefaultTau;

  void validate() const;
};

TargetKind target_kind_from_name(const std::string& name);
Discrepancy discrepancy_from_name(const std::string& name);
std::string to_string(TargetKind kind);
std::string to_string(Discrepancy kind);

/// Rows scaled to unit Euclidean norm. Throws InputError naming the first
/// zero-norm (or non-finite) row.
Embeddings normalize_embeddings(const Embeddings& e);

/// C[i][j] = <e0_i, e1_j> for already-normalized inputs.
Matrix cross_similarity(const Embeddings& e0, const Embeddings& e1);

/// Target matrix for a view geometry: identity, or the similarity of the
/// Euclidean / graph-geodesic distances.
SimilarityMatrix build_target(const PointCloud& view, const LossConfig& config);

/// Loss over one view (views.size() == 1, C = E E^T) or two views
/// (C = E0 E1^T). Inputs are raw embeddings; normalization happens inside.
double contrastive_loss(std::span<const Embeddings> views, const SimilarityMatrix& target, const LossConfig& config);

/// Gradient of contrastive_loss with respect to each raw embedding matrix,
/// through the row normalization.
std::vector<Embeddings> loss_gradient(std::span<const Embeddings> views, const SimilarityMatrix& target,
                                      const LossConfig& config);

struct OptimizeResult {
  Embeddings embeddings;
  std::vector<double> loss_trace;  // loss before each step, plus the final loss
};

struct OptimizeOptions {
  std::size_t dim = 3;
  int steps = 500;
  double learning_rate = 50.0;  // mean reduction divides by N^2, so steps need a large rate
  std::uint64_t seed = 0;
};

/// Plain gradient descent on the embeddings of a single cloud, standing in
/// for a trained backbone. Rows start uniform in [-0.1, 0.1]^D and are then
/// normalized. One view; the target is built once from `cloud` (the caller
/// subsamples). Throws RuntimeError naming the step if values go non-finite.
OptimizeResult optimize_embeddings(const PointCloud& cloud, const LossConfig& config, const OptimizeOptions& options);

}  // namespace leafseg
