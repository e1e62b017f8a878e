// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "leafseg/cloud.hpp"

namespace leafseg {

/// Axis-aligned ellipse in the xy-plane.
struct Ellipse {
  double center_x = 0.0;
  double center_y = 0.0;
  double semi_x = 1.0;  // a
  double semi_y = 1.0;  // b
};

/// (x - mx)^2 / a^2 + (y - my)^2 / b^2 - 1; <= 0 means inside or on the boundary.
double ellipse_level(const Ellipse& e, double x, double y);

struct OcclusionParams {
  int k_ellipses = 2;
  std::array<double, 2> delta{0.1, 0.05};  // max (major, minor) semi-axis, m
  std::uint64_t seed = 0;

  void validate() const;
};

struct DistortionParams {
  std::array<double, 3> theta_max{0.2, 0.2, 0.5};  // rad, about x, y, z
  bool about_origin = false;  // rotate about the world origin instead of the plant center
  std::uint64_t seed = 0;

  void validate() const;
};

/// Points kept by a removing augmentation plus their indices in the input.
struct Kept {
  PointCloud cloud;
  std::vector<std::size_t> indices;  // strictly increasing
};

/// Removes every point whose xy-projection lies in any of the ellipses.
Kept remove_in_ellipses(const PointCloud& cloud, const std::vector<Ellipse>& ellipses);

/// Samples K ellipses and removes the points they cover.
///
/// For each ellipse the major axis is x or y with probability 1/2, the major
/// and minor semi-axes are drawn from U(0, delta[0]) and U(0, delta[1]), and
/// the center is the xy position of the point that lies farthest along the
/// chosen axis (positive direction) from the plant center.
Kept leaf_occlusion(const PointCloud& cloud, const OcclusionParams& params,
                    std::vector<Ellipse>* drawn = nullptr);

/// Distance-scaled per-point rotation for given sampled fractions in [0,1]^3.
///
/// Each point gets Euler angles (d_p / max_q d_q) * fractions * theta_max
/// (elementwise) and is rotated by Rz(gamma) Ry(beta) Rx(alpha) about the
/// plant center (or the origin when about_origin is set). A cloud whose
/// points all sit on the center is returned unchanged.
PointCloud distort_with(const PointCloud& cloud, const std::array<double, 3>& fractions,
                        const std::array<double, 3>& theta_max, bool about_origin = false);

/// Per-point Euler angles used by distort_with: (d_p / max_q d_q) * fractions * theta_max,
/// with d_p the distance to the plant center (all zero when max_q d_q = 0).
std::vector<std::array<double, 3>> distortion_angles(const PointCloud& cloud, const std::array<double, 3>& fractions,
                                                     const std::array<double, 3>& theta_max);

/// Draws fractions ~ U(0,1)^3 from the seed and applies distort_with.
PointCloud leaf_distortion(const PointCloud& cloud, const DistortionParams& params,
                           std::array<double, 3>* drawn = nullptr);

/// Rz(gamma) * Ry(beta) * Rx(alpha), row-major.
std::array<double, 9> euler_rotation(double alpha, double beta, double gamma);

enum class StandardKind { rotate, translate, jitter, erase };

StandardKind standard_kind_from_name(const std::string& name);

/// Record of what a standard augmentation sampled.
struct StandardDraw {
  Vec3 axis{0.0, 0.0, 1.0};
  double angle = 0.0;
  Vec3 offset{0.0, 0.0, 0.0};
  std::size_t erase_center = 0;
  std::size_t erased = 0;
};

/// rotate: random axis, angle ~ U(0, magnitude) about the plant center.
/// translate: offset ~ U(-magnitude, magnitude) per axis.
/// jitter: per-point noise ~ U(-magnitude, magnitude) per axis.
/// erase: removes the round(magnitude * N) points nearest to a random point
///        (magnitude is a fraction in [0, 1]).
/// Throws InputError for a negative magnitude.
Kept standard_augment(const PointCloud& cloud, StandardKind kind, double magnitude, std::uint64_t seed,
                      StandardDraw* drawn = nullptr);

struct ViewConfig {
  int n_views = 1;
  std::uint64_t seed = 0;
  std::size_t n_points = 0;  // 0 keeps every point

  bool occlusion = false;
  OcclusionParams occlusion_params{};
  double erase_fraction = 0.0;  // 0 disables

  double rotation_max = 0.0;     // rad
  double translation_max = 0.0;  // m
  double jitter = 0.0;           // m
  bool distortion = false;
  DistortionParams distortion_params{};

  void validate() const;
};

/// Everything sampled while building views, for --record-draws.
struct ViewDraws {
  std::vector<Ellipse> ellipses;
  std::optional<StandardDraw> erase;
  struct PerView {
    std::optional<std::array<double, 3>> distortion;
    std::optional<StandardDraw> rotation;
    std::optional<StandardDraw> translation;
  };
  std::vector<PerView> views;
};

struct Views {
  std::vector<PointCloud> views;
  PointCloud base;
  std::vector<std::size_t> indices;  // base point i came from input point indices[i]
};

/// Builds index-aligned views.
///
/// Point-removing steps (occlusion, erase) and the subsample run once on a
/// shared base; each view then only moves points (distortion, rotation,
/// translation, jitter), so point i of every view is base point i.
/// Throws InputError if the removals empty the base.
Views make_views(const PointCloud& cloud, const ViewConfig& config, ViewDraws* draws = nullptr);

}  // namespace leafseg
