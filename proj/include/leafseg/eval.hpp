// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "leafseg/cloud.hpp"
#include "leafseg/cluster.hpp"
#include "leafseg/matrix.hpp"

namespace leafseg {

/// One-hot embeddings from ground-truth labels: the i-th distinct label (in
/// ascending label order) maps to basis vector i. Throws InputError when the
/// cloud has no labels or dim is smaller than the number of instances.
Embeddings perfect_embeddings(const PointCloud& cloud, std::size_t dim);

enum class NoiseKind { uniform, gaussian_center };

NoiseKind noise_kind_from_name(const std::string& name);
std::string to_string(NoiseKind kind);

struct NoiseConfig {
  NoiseKind kind = NoiseKind::uniform;
  double magnitude = 0.0;  // max absolute perturbation per component
  double sigma = 0.0;      // m; <= 0 picks r_init / 2 for gaussian_center
  std::uint64_t seed = 0;
};

/// Envelope of the gaussian_center model: magnitude * exp(-d^2 / (2 sigma^2)).
double noise_envelope(double magnitude, double sigma, double d);

/// Adds per-component noise ~ U(-g, g), with g = magnitude (uniform) or the
/// gaussian envelope of the point's xy-distance to the plant center.
Embeddings add_noise(const Embeddings& e, const PointCloud& cloud, const NoiseConfig& config);

/// |a ∩ b| / |a ∪ b|. Throws InputError when both sets are empty.
double instance_iou(const std::set<std::size_t>& pred, const std::set<std::size_t>& gt);

struct ThresholdDetail {
  double threshold = 0.0;
  double ap = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

struct APResult {
  std::vector<ThresholdDetail> per_threshold;
  double map = 0.0;
  double ap50 = 0.0;
};

/// AP at one IoU threshold.
///
/// Predictions are ranked by confidence (ties: ascending id); each takes the
/// unmatched ground-truth instance with the highest IoU (ties: lowest label)
/// if that IoU reaches the threshold, otherwise it is a false positive. AP
/// is the area under the precision envelope (all-points interpolation).
/// Noise points belong to no prediction.
double average_precision(const InstanceAssignment& pred, const std::vector<std::int64_t>& gt, double iou_threshold,
                         ThresholdDetail* detail = nullptr);

/// IoU thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> map_thresholds();

APResult mean_average_precision(const InstanceAssignment& pred, const std::vector<std::int64_t>& gt);

struct SweepConfig {
  std::vector<ClusterMethod> methods{ClusterMethod::radius, ClusterMethod::graphcut, ClusterMethod::dbscan};
  std::vector<NoiseKind> kinds{NoiseKind::uniform, NoiseKind::gaussian_center};
  std::vector<double> magnitudes{0.0, 0.2, 0.4, 0.6};
  int reps = 5;
  std::uint64_t seed = 0;
  std::size_t dim = 0;  // 0 = number of ground-truth instances
  double sigma = 0.0;   // 0 = r_init / 2
  PostprocessConfig postprocess{};
  double dbscan_eps = 0.5;
  int dbscan_min_pts = 5;

  void validate() const;
};

struct SweepRow {
  std::string method;
  std::string noise_kind;
  double magnitude = 0.0;
  int rep = 0;
  double map = 0.0;
  double ap50 = 0.0;
};

struct SweepSummaryRow {
  std::string method;
  std::string noise_kind;
  double magnitude = 0.0;
  double map_mean = 0.0;
  double map_std = 0.0;
  double ap50_mean = 0.0;
  double ap50_std = 0.0;
};

/// Runs every clustering method on the cloud's perfect embeddings corrupted
/// by every (noise kind, magnitude, repetition). Noise seeds are derived from
/// the base seed and the (kind, magnitude, rep) cell, so all methods see the
/// same noisy embeddings. Rows come back sorted by method, kind, magnitude, rep.
std::vector<SweepRow> noise_sweep(const PointCloud& cloud, const SweepConfig& config);

/// Runs one method on embeddings (DBSCAN clusters the embedding rows).
InstanceAssignment run_cluster_method(ClusterMethod method, const PointCloud& cloud, const Embeddings& embeddings,
                                      const SweepConfig& config);

/// Mean and sample standard deviation per (method, kind, magnitude).
std::vector<SweepSummaryRow> summarize(const std::vector<SweepRow>& rows);

void save_sweep(const std::vector<SweepRow>& rows, const std::string& path);
std::vector<SweepRow> load_sweep(const std::string& path);
void save_summary(const std::vector<SweepSummaryRow>& rows, const std::string& path);

}  // namespace leafseg
