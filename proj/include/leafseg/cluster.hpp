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

inline constexpr std::int64_t kNoise = -1;

/// Per-point instance ids (kNoise for noise) and per-instance confidence.
struct InstanceAssignment {
  std::vector<std::int64_t> ids;
  std::vector<double> confidence;  // indexed by instance id
  bool fallback = false;           // graph cut found no seeds and clustered in one pass

  std::size_t instance_count() const { return confidence.size(); }

  /// Ids are contiguous from 0, each used by at least one point, and every
  /// confidence lies in [0, 1].
  bool valid() const;
};

/// CSV `point_index,instance_id,confidence`, -1 for noise.
void save_assignment(const InstanceAssignment& a, const std::string& path);
InstanceAssignment load_assignment(const std::string& path);

enum class RadialPlane { xy, xyz };

struct PostprocessConfig {
  int steps = 4;                        // radius decrements after the tip pass
  double merge_threshold = 0.9;         // gamma: merge a new cluster when its best mean similarity >= this
  double agglomerative_threshold = 0.5; // gamma_agg: stop merging below this average-linkage similarity
  RadialPlane radial_plane = RadialPlane::xy;
  int k = kDefaultK;                    // graph-cut neighbor graph
  double tau = kDefaultTau;

  void validate() const;
};

/// Cosine similarity clamped to [-1, 1]; 0 when either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Average-linkage agglomeration under cosine similarity. Repeatedly merges
/// the most similar pair (ties: lowest index pair) while its linkage is at
/// least gamma_agg. Confidence = mean member-to-centroid cosine, clamped.
InstanceAssignment agglomerative_cluster(const Embeddings& embeddings, double gamma_agg);

struct InitialRadius {
  double radius = 0.0;  // min(d_x, d_y) / 2
  Vec3 center{0.0, 0.0, 0.0};
};

/// d_x, d_y are the largest |x|, |y| offsets from the plant center.
InitialRadius initial_radius(const PointCloud& cloud);

/// Clusters leaf tips first and works inwards.
///
/// Pass t = 0..steps considers the unassigned points farther than
/// r_init * (1 - t/steps) from the center (all remaining points on the last
/// pass), clusters their embeddings agglomeratively, and merges each new
/// cluster into the existing instance whose mean embedding is most
/// cosine-similar if that similarity is >= merge_threshold; otherwise the
/// cluster becomes a new instance.
InstanceAssignment radius_decremental_cluster(const PointCloud& cloud, const Embeddings& embeddings,
                                              const PostprocessConfig& config);

/// Seeds from the tip pass, then one minimum s-t cut per seed on a kNN graph
/// whose capacities are max(0, cosine similarity) of the endpoint embeddings.
/// Points no cut claims join the seed with the most similar mean embedding;
/// a final pass merges instances whose means are >= merge_threshold similar.
InstanceAssignment graph_cut_cluster(const PointCloud& cloud, const Embeddings& embeddings,
                                     const PostprocessConfig& config);

/// Classic DBSCAN with Euclidean metric over the rows of `features`.
/// Neighborhoods include the point itself; core points have >= min_pts.
/// Instance confidence = max(0.5, 1 - fraction of noise among the members'
/// neighbors).
InstanceAssignment dbscan(const Matrix& features, double eps, int min_pts);

/// Positions as an N x 3 feature matrix.
Matrix position_features(const PointCloud& cloud);

enum class ClusterMethod { radius, graphcut, dbscan, agglomerative };

ClusterMethod cluster_method_from_name(const std::string& name);
std::string to_string(ClusterMethod method);

}  // namespace leafseg
