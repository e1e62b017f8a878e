// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace leafseg {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
double norm(const Vec3& v);
double distance(const Vec3& a, const Vec3& b);

using Color = std::array<double, 3>;

/// Per-plant point cloud: positions in meters, RGB in [0,1], optional
/// leaf-instance labels.
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Color> colors;
  std::optional<std::vector<std::int64_t>> labels;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  bool has_labels() const { return labels.has_value(); }

  /// Throws InputError when lengths disagree, a coordinate is non-finite,
  /// a color leaves [0,1] or a label is negative.
  void validate() const;

  /// Points at the given indices, in the given order.
  PointCloud select(const std::vector<std::size_t>& indices) const;
};

enum class CloudFormat { csv, ply_ascii };

/// Picks the format from the file extension (.ply -> ply_ascii, else csv).
CloudFormat cloud_format_from_path(const std::string& path);

PointCloud load_cloud(const std::string& path, CloudFormat format);
void save_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format);

/// Arithmetic mean of all positions. Throws InputError on an empty cloud.
Vec3 plant_center(const PointCloud& cloud);

struct Subsample {
  PointCloud cloud;
  std::vector<std::size_t> indices;  // original index of each kept point
};

/// Uniform sampling of min(n, N) points without replacement.
///
/// Uses a seeded Fisher-Yates prefix shuffle; the chosen indices are then
/// sorted so the output keeps the original relative order. n >= N returns
/// the cloud unchanged with the identity map.
Subsample subsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed);

struct SynthPlantParams {
  int n_leaves = 3;
  int points_per_leaf = 100;
  int stem_points = 0;
  double leaf_length = 0.15;  // m
  double leaf_width = 0.06;   // m
  double droop_angle = 0.6;   // rad, change of midrib elevation from base to tip
  double position_jitter = 0.0005;  // m
  double petiole_radius = 0.01;     // m, leaves attach on this circle around the stem
  std::uint64_t seed = 0;

  void validate() const;
};

/// Labeled synthetic rosette.
///
/// Leaf i sits at azimuth 2*pi*i/n_leaves. Its midrib starts on the petiole
/// circle, rises and then droops by droop_angle along its length; the blade
/// has an elliptical half-width profile peaking at leaf_width/2. Stem points
/// lie on a short vertical stalk at the origin and take the label of the
/// nearest petiole. Output order: leaf 0 .. leaf n-1, then stem.
PointCloud synth_plant(const SynthPlantParams& params);

/// Two leaves sharing a stem where the second folds back over the first.
/// p1 lies on the lower leaf right below p2 on the upper leaf; p3 is on the
/// upper leaf farther from p2 than p1 is, but connected to it along the blade.
struct OverlapFixture {
  PointCloud cloud;
  std::size_t p1 = 0;
  std::size_t p2 = 0;
  std::size_t p3 = 0;
};

OverlapFixture overlap_fixture(double spacing = 0.005, double layer_gap = 0.03);

}  // namespace leafseg
