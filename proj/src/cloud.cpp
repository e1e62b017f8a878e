// SPDX-License-Identifier: Apache-2.0
#include "leafseg/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "leafseg/error.hpp"
#include "leafseg/rng.hpp"
#include "text_io.hpp"

namespace leafseg {

using detail::append_double;
using detail::append_int;
using detail::parse_double;
using detail::parse_int;
using detail::where;

double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

void PointCloud::validate() const {
  if (colors.size() != positions.size()) {
    throw InputError("point cloud: " + std::to_string(positions.size()) + " positions but " +
                     std::to_string(colors.size()) + " colors");
  }
  if (labels && labels->size() != positions.size()) {
    throw InputError("point cloud: " + std::to_string(positions.size()) + " positions but " +
                     std::to_string(labels->size()) + " labels");
  }
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (double c : positions[i]) {
      if (!std::isfinite(c)) throw InputError("point cloud: non-finite coordinate at point " + std::to_string(i));
    }
    for (double c : colors[i]) {
      if (!(c >= 0.0 && c <= 1.0)) throw InputError("point cloud: color outside [0,1] at point " + std::to_string(i));
    }
    if (labels && (*labels)[i] < 0) throw InputError("point cloud: negative label at point " + std::to_string(i));
  }
}

PointCloud PointCloud::select(const std::vector<std::size_t>& indices) const {
  PointCloud out;
  out.positions.reserve(indices.size());
  out.colors.reserve(indices.size());
  if (labels) out.labels.emplace().reserve(indices.size());
  for (std::size_t i : indices) {
    out.positions.push_back(positions.at(i));
    out.colors.push_back(colors.at(i));
    if (labels) out.labels->push_back((*labels)[i]);
  }
  return out;
}

CloudFormat cloud_format_from_path(const std::string& path) {
  std::string lower = path;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower.size() >= 4 && lower.compare(lower.size() - 4, 4, ".ply") == 0) return CloudFormat::ply_ascii;
  return CloudFormat::csv;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError(path + ": cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw RuntimeError(path + ": write failed");
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

void check_point(PointCloud& cloud, const std::string& path, std::size_t line_no) {
  for (double c : cloud.positions.back()) {
    if (!std::isfinite(c)) throw InputError(where(path, line_no) + "non-finite coordinate");
  }
  for (double c : cloud.colors.back()) {
    if (!(c >= 0.0 && c <= 1.0)) throw InputError(where(path, line_no) + "color outside [0,1]");
  }
  if (cloud.labels && cloud.labels->back() < 0) throw InputError(where(path, line_no) + "negative label");
}

PointCloud load_csv(const std::string& path) {
  const std::string text = read_file(path);
  const auto lines = lines_of(text);
  if (lines.empty()) throw InputError(where(path, 1) + "missing header");
  const auto header = detail::split(lines[0], ',');
  static const char* kCols[] = {"x", "y", "z", "r", "g", "b"};
  bool with_labels = false;
  if (header.size() == 7 && header[6] == "label") {
    with_labels = true;
  } else if (header.size() != 6) {
    throw InputError(where(path, 1) + "expected header x,y,z,r,g,b[,label]");
  }
  for (int c = 0; c < 6; ++c) {
    if (header[c] != kCols[c]) throw InputError(where(path, 1) + "expected header x,y,z,r,g,b[,label]");
  }
  PointCloud cloud;
  if (with_labels) cloud.labels.emplace();
  const std::size_t ncols = header.size();
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (detail::trim(lines[li]).empty()) continue;
    const auto tok = detail::split(lines[li], ',');
    if (tok.size() != ncols) {
      throw InputError(where(path, line_no) + "expected " + std::to_string(ncols) + " columns, found " +
                       std::to_string(tok.size()));
    }
    cloud.positions.push_back({parse_double(tok[0], path, line_no), parse_double(tok[1], path, line_no),
                               parse_double(tok[2], path, line_no)});
    cloud.colors.push_back({parse_double(tok[3], path, line_no), parse_double(tok[4], path, line_no),
                            parse_double(tok[5], path, line_no)});
    if (with_labels) cloud.labels->push_back(parse_int(tok[6], path, line_no));
    check_point(cloud, path, line_no);
  }
  return cloud;
}

PointCloud load_ply(const std::string& path) {
  const std::string text = read_file(path);
  const auto lines = lines_of(text);
  std::size_t li = 0;
  auto next_line = [&]() -> std::string_view {
    if (li >= lines.size()) throw InputError(where(path, li + 1) + "unexpected end of header");
    return detail::trim(lines[li++]);
  };
  if (next_line() != "ply") throw InputError(where(path, 1) + "missing 'ply' magic");
  std::size_t count = 0;
  bool in_vertex = false;
  bool seen_vertex = false;
  std::vector<std::string> props;
  while (true) {
    const std::string_view line = next_line();
    const auto tok = detail::split_ws(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") throw InputError(where(path, li) + "only ascii PLY is supported");
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw InputError(where(path, li) + "malformed element line");
      in_vertex = tok[1] == "vertex";
      if (in_vertex) {
        seen_vertex = true;
        count = static_cast<std::size_t>(parse_int(tok[2], path, li));
      } else if (parse_int(tok[2], path, li) != 0) {
        throw InputError(where(path, li) + "unsupported element '" + std::string(tok[1]) + "'");
      }
    } else if (tok[0] == "property") {
      if (tok.size() < 3) throw InputError(where(path, li) + "malformed property line");
      if (in_vertex) props.emplace_back(tok.back());
    } else {
      throw InputError(where(path, li) + "unexpected header line");
    }
  }
  if (!seen_vertex) throw InputError(path + ": no vertex element");
  auto find = [&](const std::string& name) -> int {
    auto it = std::find(props.begin(), props.end(), name);
    return it == props.end() ? -1 : static_cast<int>(it - props.begin());
  };
  const int ix = find("x"), iy = find("y"), iz = find("z");
  const int ir = find("red"), ig = find("green"), ib = find("blue"), il = find("label");
  if (ix < 0 || iy < 0 || iz < 0 || ir < 0 || ig < 0 || ib < 0) {
    throw InputError(path + ": PLY needs x y z red green blue properties");
  }
  PointCloud cloud;
  if (il >= 0) cloud.labels.emplace();
  std::size_t read = 0;
  while (read < count) {
    if (li >= lines.size()) throw InputError(path + ": expected " + std::to_string(count) + " vertices, found " + std::to_string(read));
    const std::size_t line_no = li + 1;
    const auto tok = detail::split_ws(lines[li++]);
    if (tok.empty()) continue;
    if (tok.size() != props.size()) {
      throw InputError(where(path, line_no) + "expected " + std::to_string(props.size()) + " values, found " +
                       std::to_string(tok.size()));
    }
    auto col = [&](int i) { return parse_double(tok[i], path, line_no); };
    auto rgb = [&](int i) {
      const std::int64_t v = parse_int(tok[i], path, line_no);
      if (v < 0 || v > 255) throw InputError(where(path, line_no) + "color outside 0..255");
      return static_cast<double>(v) / 255.0;
    };
    cloud.positions.push_back({col(ix), col(iy), col(iz)});
    cloud.colors.push_back({rgb(ir), rgb(ig), rgb(ib)});
    if (il >= 0) cloud.labels->push_back(parse_int(tok[il], path, line_no));
    check_point(cloud, path, line_no);
    ++read;
  }
  return cloud;
}

std::string format_csv(const PointCloud& cloud) {
  std::string out = cloud.labels ? "x,y,z,r,g,b,label\n" : "x,y,z,r,g,b\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      append_double(out, cloud.positions[i][c]);
      out += ',';
    }
    for (int c = 0; c < 3; ++c) {
      append_double(out, cloud.colors[i][c]);
      if (c < 2 || cloud.labels) out += ',';
    }
    if (cloud.labels) append_int(out, (*cloud.labels)[i]);
    out += '\n';
  }
  return out;
}

std::string format_ply(const PointCloud& cloud) {
  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) +
                    "\nproperty double x\nproperty double y\nproperty double z\n"
                    "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (cloud.labels) out += "property int label\n";
  out += "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      append_double(out, cloud.positions[i][c]);
      out += ' ';
    }
    for (int c = 0; c < 3; ++c) {
      append_int(out, static_cast<std::int64_t>(std::lround(cloud.colors[i][c] * 255.0)));
      if (c < 2 || cloud.labels) out += ' ';
    }
    if (cloud.labels) append_int(out, (*cloud.labels)[i]);
    out += '\n';
  }
  return out;
}

}  // namespace

PointCloud load_cloud(const std::string& path, CloudFormat format) {
  return format == CloudFormat::csv ? load_csv(path) : load_ply(path);
}

void save_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format) {
  cloud.validate();
  write_file(path, format == CloudFormat::csv ? format_csv(cloud) : format_ply(cloud));
}

Vec3 plant_center(const PointCloud& cloud) {
  if (cloud.empty()) throw InputError("plant_center: empty cloud");
  Vec3 sum{0.0, 0.0, 0.0};
  for (const auto& p : cloud.positions) sum = sum + p;
  return (1.0 / static_cast<double>(cloud.size())) * sum;
}

Subsample subsample(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InputError("subsample: n must be positive");
  if (cloud.empty()) throw InputError("subsample: empty cloud");
  const std::size_t total = cloud.size();
  std::vector<std::size_t> idx(total);
  for (std::size_t i = 0; i < total; ++i) idx[i] = i;
  if (n >= total) return {cloud, idx};
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return {cloud.select(idx), idx};
}

void SynthPlantParams::validate() const {
  if (n_leaves < 1) throw InputError("synth_plant: n_leaves must be >= 1");
  if (points_per_leaf < 1) throw InputError("synth_plant: points_per_leaf must be >= 1");
  if (stem_points < 0) throw InputError("synth_plant: stem_points must be >= 0");
  if (!(leaf_width > 0.0) || !(leaf_length > leaf_width)) {
    throw InputError("synth_plant: need leaf_length > leaf_width > 0");
  }
  if (!std::isfinite(droop_angle)) throw InputError("synth_plant: droop_angle must be finite");
  if (!(position_jitter >= 0.0)) throw InputError("synth_plant: position_jitter must be >= 0");
  if (!(petiole_radius >= 0.0)) throw InputError("synth_plant: petiole_radius must be >= 0");
}

namespace {

constexpr double kStemHeight = 0.02;
constexpr double kStemRadius = 0.003;
constexpr double kBaseElevation = 0.5;

Color clamp_color(Color c) {
  for (double& v : c) v = std::clamp(v, 0.0, 1.0);
  return c;
}

}  // namespace

PointCloud synth_plant(const SynthPlantParams& params) {
  params.validate();
  Rng rng(params.seed);
  PointCloud cloud;
  cloud.labels.emplace();
  const std::size_t total = static_cast<std::size_t>(params.n_leaves) * params.points_per_leaf + params.stem_points;
  cloud.positions.reserve(total);
  cloud.colors.reserve(total);
  cloud.labels->reserve(total);

  const double len = params.leaf_length;
  const double droop = params.droop_angle;
  const double j = params.position_jitter;
  std::vector<Vec3> petioles;

  for (int leaf = 0; leaf < params.n_leaves; ++leaf) {
    const double az = 2.0 * std::numbers::pi * leaf / params.n_leaves;
    const Vec3 dir{std::cos(az), std::sin(az), 0.0};
    const Vec3 side{-std::sin(az), std::cos(az), 0.0};
    const Vec3 base = Vec3{0.0, 0.0, kStemHeight} + params.petiole_radius * dir;
    petioles.push_back(base);
    const Color tint{0.15 + 0.05 * (leaf % 3), 0.55 + 0.04 * (leaf % 4), 0.2};
    for (int k = 0; k < params.points_per_leaf; ++k) {
      const double u = rng.uniform();
      const double v = rng.uniform(-1.0, 1.0);
      // Midrib elevation goes from kBaseElevation at the petiole to
      // kBaseElevation - droop at the tip; integrate the unit tangent.
      double along = 0.0;
      double up = 0.0;
      if (std::abs(droop) > 1e-12) {
        along = len * (std::sin(kBaseElevation) - std::sin(kBaseElevation - droop * u)) / droop;
        up = len * (std::cos(kBaseElevation - droop * u) - std::cos(kBaseElevation)) / droop;
      } else {
        along = len * u * std::cos(kBaseElevation);
        up = len * u * std::sin(kBaseElevation);
      }
      const double t = 2.0 * u - 1.0;
      const double half_width = 0.5 * params.leaf_width * std::sqrt(std::max(0.0, 1.0 - t * t));
      Vec3 p = base + along * dir + (v * half_width) * side + Vec3{0.0, 0.0, up};
      p = p + Vec3{rng.uniform(-j, j), rng.uniform(-j, j), rng.uniform(-j, j)};
      cloud.positions.push_back(p);
      cloud.colors.push_back(clamp_color(tint + Color{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), 0.0}));
      cloud.labels->push_back(leaf);
    }
  }

  for (int k = 0; k < params.stem_points; ++k) {
    const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double rad = kStemRadius * std::sqrt(rng.uniform());
    const Vec3 p{rad * std::cos(ang), rad * std::sin(ang), rng.uniform(0.0, kStemHeight)};
    std::size_t best = 0;
    for (std::size_t leaf = 1; leaf < petioles.size(); ++leaf) {
      if (distance(p, petioles[leaf]) < distance(p, petioles[best])) best = leaf;
    }
    cloud.positions.push_back(p);
    cloud.colors.push_back(clamp_color(Color{0.35, 0.45, 0.2} + Color{rng.uniform(-0.03, 0.03), 0.0, 0.0}));
    cloud.labels->push_back(static_cast<std::int64_t>(best));
  }
  return cloud;
}

OverlapFixture overlap_fixture(double spacing, double layer_gap) {
  OverlapFixture fx;
  auto& c = fx.cloud;
  c.labels.emplace();
  auto add = [&](Vec3 p, std::int64_t label) {
    c.positions.push_back(p);
    c.colors.push_back(label == 0 ? Color{0.2, 0.6, 0.2} : Color{0.3, 0.7, 0.2});
    c.labels->push_back(label);
    return c.size() - 1;
  };
  const int cols = static_cast<int>(std::lround(0.2 / spacing));
  const int p1_col = static_cast<int>(std::lround(0.15 / spacing));
  const int p3_col = static_cast<int>(std::lround(0.10 / spacing));
  // Lower blade.
  for (int i = 1; i <= cols; ++i) {
    for (int r = -2; r <= 2; ++r) {
      const std::size_t id = add({i * spacing, r * spacing, 0.0}, 0);
      if (i == p1_col && r == 0) fx.p1 = id;
    }
  }
  // Stalk joining both blades at x = 0.
  const int stalk = static_cast<int>(std::lround(layer_gap / spacing));
  for (int k = 0; k <= stalk; ++k) add({0.0, 0.0, k * spacing}, 0);
  // Upper blade, folded back over the lower one.
  for (int i = 1; i <= cols; ++i) {
    for (int r = -2; r <= 2; ++r) {
      const std::size_t id = add({i * spacing, r * spacing, layer_gap}, 1);
      if (i == p1_col && r == 0) fx.p2 = id;
      if (i == p3_col && r == 0) fx.p3 = id;
    }
  }
  return fx;
}

}  // namespace leafseg
