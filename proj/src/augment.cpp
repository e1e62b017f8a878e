// SPDX-License-Identifier: Apache-2.0
#include "leafseg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "leafseg/error.hpp"
#include "leafseg/rng.hpp"

namespace leafseg {

double ellipse_level(const Ellipse& e, double x, double y) {
  const double dx = x - e.center_x;
  const double dy = y - e.center_y;
  return dx * dx / (e.semi_x * e.semi_x) + dy * dy / (e.semi_y * e.semi_y) - 1.0;
}

void OcclusionParams::validate() const {
  if (k_ellipses < 1) throw InputError("occlusion: k_ellipses must be >= 1");
  if (!(delta[0] > 0.0) || !(delta[1] > 0.0)) throw InputError("occlusion: delta components must be > 0");
}

void DistortionParams::validate() const {
  for (double a : theta_max) {
    if (!(a >= 0.0 && a <= std::numbers::pi)) throw InputError("distortion: theta_max entries must be in [0, pi]");
  }
}

Kept remove_in_ellipses(const PointCloud& cloud, const std::vector<Ellipse>& ellipses) {
  Kept out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.positions[i];
    const bool inside = std::any_of(ellipses.begin(), ellipses.end(),
                                    [&](const Ellipse& e) { return ellipse_level(e, p[0], p[1]) <= 0.0; });
    if (!inside) out.indices.push_back(i);
  }
  out.cloud = cloud.select(out.indices);
  return out;
}

Kept leaf_occlusion(const PointCloud& cloud, const OcclusionParams& params, std::vector<Ellipse>* drawn) {
  params.validate();
  if (cloud.empty()) throw InputError("leaf_occlusion: empty cloud");
  const Vec3 center = plant_center(cloud);
  Rng rng(params.seed);
  std::vector<Ellipse> ellipses;
  for (int k = 0; k < params.k_ellipses; ++k) {
    const int axis = rng.coin() ? 0 : 1;
    const double major = rng.uniform(0.0, params.delta[0]);
    const double minor = rng.uniform(0.0, params.delta[1]);
    std::size_t far = 0;
    for (std::size_t i = 1; i < cloud.size(); ++i) {
      if (cloud.positions[i][axis] - center[axis] > cloud.positions[far][axis] - center[axis]) far = i;
    }
    Ellipse e;
    e.center_x = cloud.positions[far][0];
    e.center_y = cloud.positions[far][1];
    e.semi_x = axis == 0 ? major : minor;
    e.semi_y = axis == 0 ? minor : major;
    ellipses.push_back(e);
  }
  if (drawn != nullptr) *drawn = ellipses;
  return remove_in_ellipses(cloud, ellipses);
}

std::array<double, 9> euler_rotation(double alpha, double beta, double gamma) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double cg = std::cos(gamma), sg = std::sin(gamma);
  // Rz(g) * Ry(b) * Rx(a)
  return {cg * cb, cg * sb * sa - sg * ca, cg * sb * ca + sg * sa,
          sg * cb, sg * sb * sa + cg * ca, sg * sb * ca - cg * sa,
          -sb,     cb * sa,                cb * ca};
}

namespace {

Vec3 mat_vec(const std::array<double, 9>& r, const Vec3& p) {
  return {r[0] * p[0] + r[1] * p[1] + r[2] * p[2], r[3] * p[0] + r[4] * p[1] + r[5] * p[2],
          r[6] * p[0] + r[7] * p[1] + r[8] * p[2]};
}

std::array<double, 9> axis_angle(const Vec3& axis, double angle) {
  const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  const double x = axis[0], y = axis[1], z = axis[2];
  return {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
          t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
          t * x * z - s * y, t * y * z + s * x, t * z * z + c};
}

}  // namespace

std::vector<std::array<double, 3>> distortion_angles(const PointCloud& cloud, const std::array<double, 3>& fractions,
                                                     const std::array<double, 3>& theta_max) {
  if (cloud.empty()) throw InputError("leaf_distortion: empty cloud");
  const Vec3 center = plant_center(cloud);
  double max_d = 0.0;
  std::vector<double> dist(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    dist[i] = distance(cloud.positions[i], center);
    max_d = std::max(max_d, dist[i]);
  }
  std::vector<std::array<double, 3>> angles(cloud.size(), {0.0, 0.0, 0.0});
  if (max_d == 0.0) return angles;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double w = dist[i] / max_d;
    for (int a = 0; a < 3; ++a) angles[i][a] = w * (fractions[a] * theta_max[a]);
  }
  return angles;
}

PointCloud distort_with(const PointCloud& cloud, const std::array<double, 3>& fractions,
                        const std::array<double, 3>& theta_max, bool about_origin) {
  const auto angles = distortion_angles(cloud, fractions, theta_max);
  const Vec3 pivot = about_origin ? Vec3{0.0, 0.0, 0.0} : plant_center(cloud);
  PointCloud out = cloud;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& t = angles[i];
    if (t[0] == 0.0 && t[1] == 0.0 && t[2] == 0.0) continue;
    out.positions[i] = mat_vec(euler_rotation(t[0], t[1], t[2]), cloud.positions[i] - pivot) + pivot;
  }
  return out;
}

PointCloud leaf_distortion(const PointCloud& cloud, const DistortionParams& params, std::array<double, 3>* drawn) {
  params.validate();
  Rng rng(params.seed);
  const std::array<double, 3> fractions{rng.uniform(), rng.uniform(), rng.uniform()};
  if (drawn != nullptr) *drawn = fractions;
  return distort_with(cloud, fractions, params.theta_max, params.about_origin);
}

StandardKind standard_kind_from_name(const std::string& name) {
  if (name == "rotate") return StandardKind::rotate;
  if (name == "translate") return StandardKind::translate;
  if (name == "jitter") return StandardKind::jitter;
  if (name == "erase") return StandardKind::erase;
  throw InputError("unknown augmentation '" + name + "'");
}

Kept standard_augment(const PointCloud& cloud, StandardKind kind, double magnitude, std::uint64_t seed,
                      StandardDraw* drawn) {
  if (!(magnitude >= 0.0)) throw InputError("standard_augment: magnitude must be >= 0");
  if (cloud.empty()) throw InputError("standard_augment: empty cloud");
  Rng rng(seed);
  StandardDraw draw;
  Kept out;
  out.cloud = cloud;
  out.indices.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out.indices[i] = i;

  switch (kind) {
    case StandardKind::rotate: {
      const double z = rng.uniform(-1.0, 1.0);
      const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      draw.axis = {s * std::cos(phi), s * std::sin(phi), z};
      draw.angle = rng.uniform(0.0, magnitude);
      const auto r = axis_angle(draw.axis, draw.angle);
      const Vec3 center = plant_center(cloud);
      for (auto& p : out.cloud.positions) p = mat_vec(r, p - center) + center;
      break;
    }
    case StandardKind::translate: {
      draw.offset = {rng.uniform(-magnitude, magnitude), rng.uniform(-magnitude, magnitude),
                     rng.uniform(-magnitude, magnitude)};
      for (auto& p : out.cloud.positions) p = p + draw.offset;
      break;
    }
    case StandardKind::jitter: {
      if (magnitude == 0.0) break;
      for (auto& p : out.cloud.positions) {
        p = p + Vec3{rng.uniform(-magnitude, magnitude), rng.uniform(-magnitude, magnitude),
                     rng.uniform(-magnitude, magnitude)};
      }
      break;
    }
    case StandardKind::erase: {
      if (magnitude > 1.0) throw InputError("standard_augment: erase fraction must be in [0, 1]");
      const std::size_t n = cloud.size();
      const auto remove = static_cast<std::size_t>(std::llround(magnitude * static_cast<double>(n)));
      draw.erase_center = static_cast<std::size_t>(rng.below(n));
      draw.erased = remove;
      const Vec3 c = cloud.positions[draw.erase_center];
      std::vector<std::pair<double, std::size_t>> by_dist(n);
      for (std::size_t i = 0; i < n; ++i) by_dist[i] = {distance(cloud.positions[i], c), i};
      std::sort(by_dist.begin(), by_dist.end());
      std::vector<bool> gone(n, false);
      for (std::size_t i = 0; i < remove; ++i) gone[by_dist[i].second] = true;
      out.indices.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (!gone[i]) out.indices.push_back(i);
      }
      out.cloud = cloud.select(out.indices);
      break;
    }
  }
  if (drawn != nullptr) *drawn = draw;
  return out;
}

void ViewConfig::validate() const {
  if (n_views != 1 && n_views != 2) throw InputError("views: n_views must be 1 or 2");
  if (occlusion) occlusion_params.validate();
  if (distortion) distortion_params.validate();
  if (!(erase_fraction >= 0.0 && erase_fraction <= 1.0)) throw InputError("views: erase fraction must be in [0, 1]");
  if (!(rotation_max >= 0.0) || !(translation_max >= 0.0) || !(jitter >= 0.0)) {
    throw InputError("views: augmentation magnitudes must be >= 0");
  }
}

namespace {

void compose(std::vector<std::size_t>& indices, const std::vector<std::size_t>& kept) {
  std::vector<std::size_t> next(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) next[i] = indices[kept[i]];
  indices = std::move(next);
}

}  // namespace

Views make_views(const PointCloud& cloud, const ViewConfig& config, ViewDraws* draws) {
  config.validate();
  if (cloud.empty()) throw InputError("make_views: empty cloud");
  ViewDraws local;
  ViewDraws& rec = draws != nullptr ? *draws : local;
  rec = ViewDraws{};

  Views out;
  out.base = cloud;
  out.indices.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) out.indices[i] = i;

  if (config.occlusion) {
    OcclusionParams p = config.occlusion_params;
    p.seed = derive_seed(config.seed, 0);
    Kept k = leaf_occlusion(out.base, p, &rec.ellipses);
    compose(out.indices, k.indices);
    out.base = std::move(k.cloud);
    if (out.base.empty()) throw InputError("make_views: occlusion removed every point");
  }
  if (config.erase_fraction > 0.0) {
    StandardDraw d;
    Kept k = standard_augment(out.base, StandardKind::erase, config.erase_fraction, derive_seed(config.seed, 1), &d);
    rec.erase = d;
    compose(out.indices, k.indices);
    out.base = std::move(k.cloud);
    if (out.base.empty()) throw InputError("make_views: erase removed every point");
  }
  if (config.n_points > 0) {
    Subsample s = subsample(out.base, config.n_points, derive_seed(config.seed, 2));
    compose(out.indices, s.indices);
    out.base = std::move(s.cloud);
  }

  for (int v = 0; v < config.n_views; ++v) {
    const std::uint64_t stream = 10 + 4 * static_cast<std::uint64_t>(v);
    ViewDraws::PerView pv;
    PointCloud view = out.base;
    if (config.distortion) {
      DistortionParams p = config.distortion_params;
      p.seed = derive_seed(config.seed, stream);
      std::array<double, 3> f{};
      view = leaf_distortion(view, p, &f);
      pv.distortion = f;
    }
    if (config.rotation_max > 0.0) {
      StandardDraw d;
      view = standard_augment(view, StandardKind::rotate, config.rotation_max, derive_seed(config.seed, stream + 1), &d).cloud;
      pv.rotation = d;
    }
    if (config.translation_max > 0.0) {
      StandardDraw d;
      view = standard_augment(view, StandardKind::translate, config.translation_max, derive_seed(config.seed, stream + 2), &d)
                 .cloud;
      pv.translation = d;
    }
    if (config.jitter > 0.0) {
      view = standard_augment(view, StandardKind::jitter, config.jitter, derive_seed(config.seed, stream + 3)).cloud;
    }
    rec.views.push_back(pv);
    out.views.push_back(std::move(view));
  }
  return out;
}

}  // namespace leafseg
