// SPDX-License-Identifier: Apache-2.0
#include "leafseg/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <list>
#include <map>
#include <set>

#include "leafseg/augment.hpp"
#include "leafseg/cloud.hpp"
#include "leafseg/cluster.hpp"
#include "leafseg/error.hpp"
#include "leafseg/eval.hpp"
#include "leafseg/geodesy.hpp"
#include "leafseg/loss.hpp"
#include "leafseg/parallel.hpp"
#include "leafseg/plot.hpp"
#include "leafseg/rng.hpp"
#include "leafseg/simd/kernels.hpp"
#include "text_io.hpp"

namespace leafseg::cli {
namespace {

using json = nlohmann::ordered_json;

void log(const std::string& msg) { std::cerr << "[leafseg] " << msg << '\n'; }

// ---------------------------------------------------------------------------
// Parameters: every flag has a config key and a typed default. The resolved
// config is defaults <- --config file <- explicitly given flags.

struct Param {
  std::string key;
  json def;
  CLI::Option* opt = nullptr;
  std::string raw;
  bool is_switch = false;
};

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  std::list<Param> params;  // stable addresses for CLI11 bindings
  std::function<int(const json&)> body;
};

std::string key_of(const std::string& flag) {
  std::string k = flag;
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

void add(Command& c, const std::string& names, const std::string& key, json def, const std::string& help) {
  Param& p = c.params.emplace_back();
  p.key = key;
  p.def = std::move(def);
  if (p.def.is_boolean()) {
    p.is_switch = true;
    p.opt = c.app->add_flag(names, help);
  } else {
    std::string h = help;
    if (!p.def.is_null() && p.def != json("")) h += " [" + (p.def.is_string() ? p.def.get<std::string>() : p.def.dump()) + "]";
    p.opt = c.app->add_option(names, p.raw, h);
  }
}

// Flag given as `--leaf-length` maps to key `leaf_length`.
void add(Command& c, const std::string& flag, json def, const std::string& help) {
  add(c, "--" + flag, key_of(flag), std::move(def), help);
}

json convert(const std::string& key, const std::string& raw, const json& like) {
  try {
    if (like.is_number_unsigned()) {
      if (!raw.empty() && raw[0] == '-') throw InputError("must be non-negative");
      return std::stoull(raw);
    }
    if (like.is_number_integer()) return std::stoll(raw);
    if (like.is_number()) return detail::parse_double(raw, "--" + key, 0);
    if (like.is_array()) {
      json out = json::array();
      const json elem = like.empty() ? json("") : like.front();
      for (auto tok : detail::split(raw, ',')) out.push_back(convert(key, std::string(detail::trim(tok)), elem));
      return out;
    }
    return raw;
  } catch (const InputError& e) {
    throw InputError("--" + key + ": invalid value '" + raw + "': " + e.what());
  } catch (const std::exception&) {
    throw InputError("--" + key + ": invalid value '" + raw + "'");
  }
}

json resolve(const Command& c, const std::list<Param>& globals, const std::string& config_path) {
  json cfg = json::object();
  cfg["command"] = c.name;
  for (const auto* list : {&globals, &c.params}) {
    for (const auto& p : *list) cfg[p.key] = p.def;
  }
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) throw InputError(config_path + ": cannot open config");
    json file;
    try {
      file = json::parse(f);
    } catch (const json::parse_error& e) {
      throw InputError(config_path + ": " + e.what());
    }
    if (!file.is_object()) throw InputError(config_path + ": config must be a JSON object");
    for (auto it = file.begin(); it != file.end(); ++it) {
      if (it.key() == "draws") continue;  // recorded output of an earlier run
      if (it.key() == "command") {
        if (it.value() != c.name) throw InputError(config_path + ": config is for command " + it.value().dump());
        continue;
      }
      if (!cfg.contains(it.key())) throw InputError(config_path + ": unknown key '" + it.key() + "' for " + c.name);
      cfg[it.key()] = it.value();
    }
  }
  for (const auto* list : {&globals, &c.params}) {
    for (const auto& p : *list) {
      if (p.opt->count() == 0) continue;
      cfg[p.key] = p.is_switch ? json(true) : convert(p.key, p.raw, p.def);
    }
  }
  return cfg;
}

template <class T>
T get(const json& cfg, const std::string& key) {
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError("config key '" + key + "': " + e.what());
  }
}

std::string need_path(const json& cfg, const std::string& key, const std::string& flag) {
  const auto s = get<std::string>(cfg, key);
  if (s.empty()) throw InputError(flag + " is required");
  return s;
}

template <std::size_t N>
std::array<double, N> get_array(const json& cfg, const std::string& key) {
  const auto v = get<std::vector<double>>(cfg, key);
  if (v.size() != N) throw InputError("config key '" + key + "': expected " + std::to_string(N) + " values");
  std::array<double, N> a{};
  std::copy(v.begin(), v.end(), a.begin());
  return a;
}

void write_json(const json& j, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeError(path + ": cannot open for writing");
  f << j.dump(2) << '\n';
  if (!f) throw RuntimeError(path + ": write failed");
}

void echo_config(const json& cfg, const std::string& out) {
  write_json(cfg, out + ".config.json");
  log("config -> " + out + ".config.json");
}

PointCloud read_cloud(const std::string& path) {
  PointCloud c = load_cloud(path, cloud_format_from_path(path));
  log("loaded " + std::to_string(c.size()) + " points from " + path);
  return c;
}

void write_cloud(const PointCloud& c, const std::string& path) {
  save_cloud(c, path, cloud_format_from_path(path));
  log("wrote " + std::to_string(c.size()) + " points to " + path);
}

Embeddings read_embeddings(const std::string& path, std::size_t expected_rows) {
  Embeddings e = as_embeddings(load_matrix(path, matrix_format_from_path(path)));
  if (e.rows() != expected_rows) {
    throw InputError(path + ": " + std::to_string(e.rows()) + " embedding rows for " + std::to_string(expected_rows) +
                     " points");
  }
  return e;
}

void write_matrix(const Matrix& m, const std::string& path) {
  save_matrix(m, path, matrix_format_from_path(path));
  log("wrote " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " matrix to " + path);
}

std::string strip_ext(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.rfind('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
  return path.substr(0, dot);
}

std::string write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeError(path + ": cannot open for writing");
  f << text;
  if (!f) throw RuntimeError(path + ": write failed");
  return path;
}

// ---------------------------------------------------------------------------
// Shared option groups.

void add_graph_params(Command& c) {
  add(c, "k", kDefaultK, "neighbors per point in the kNN graph");
  add(c, "tau", kDefaultTau, "maximum edge length (m)");
}

void add_loss_params(Command& c) {
  add(c, "target", "graph", "similarity target: identity (point-to-point), euclidean or graph");
  add(c, "discrepancy", "squared", "per-entry mismatch: squared, absolute or literal");
  add(c, "reduction", "mean", "mean (divide by N^2) or sum");
  add(c, "mask-diagonal", false, "leave the i == j terms out of the loss");
  add(c, "epsilon", kDefaultEpsilon, "similarity epsilon");
  add(c, "points", std::uint64_t{10000}, "loss subsample size");
  add_graph_params(c);
}

LossConfig loss_config(const json& cfg, int n_views) {
  LossConfig lc;
  lc.target = target_kind_from_name(get<std::string>(cfg, "target"));
  lc.discrepancy = discrepancy_from_name(get<std::string>(cfg, "discrepancy"));
  const auto red = get<std::string>(cfg, "reduction");
  if (red == "mean") {
    lc.reduction = Reduction::mean;
  } else if (red == "sum") {
    lc.reduction = Reduction::sum;
  } else {
    throw InputError("unknown reduction '" + red + "' (expected mean or sum)");
  }
  lc.mask_diagonal = get<bool>(cfg, "mask_diagonal");
  lc.epsilon = get<double>(cfg, "epsilon");
  lc.n_points = get<std::uint64_t>(cfg, "points");
  lc.k = get<int>(cfg, "k");
  lc.tau = get<double>(cfg, "tau");
  lc.n_views = n_views;
  lc.validate();
  return lc;
}

void add_post_params(Command& c) {
  add(c, "steps", 4, "radius decrements after the tip pass");
  add(c, "gamma", 0.9, "merge threshold on mean-embedding cosine similarity");
  add(c, "gamma-agg", 0.5, "average-linkage stop threshold");
  add(c, "plane", "xy", "radial distance plane: xy or xyz");
  add_graph_params(c);
}

PostprocessConfig post_config(const json& cfg) {
  PostprocessConfig pc;
  pc.steps = get<int>(cfg, "steps");
  pc.merge_threshold = get<double>(cfg, "gamma");
  pc.agglomerative_threshold = get<double>(cfg, "gamma_agg");
  const auto plane = get<std::string>(cfg, "plane");
  if (plane == "xy") {
    pc.radial_plane = RadialPlane::xy;
  } else if (plane == "xyz" || plane == "3d") {
    pc.radial_plane = RadialPlane::xyz;
  } else {
    throw InputError("unknown plane '" + plane + "' (expected xy or xyz)");
  }
  pc.k = get<int>(cfg, "k");
  pc.tau = get<double>(cfg, "tau");
  pc.validate();
  return pc;
}

void add_synth_params(Command& c, int leaves) {
  add(c, "leaves", leaves, "number of leaves");
  add(c, "points-per-leaf", 100, "points per leaf");
  add(c, "stem-points", 0, "points on the stem");
  add(c, "leaf-length", 0.15, "leaf length (m)");
  add(c, "leaf-width", 0.06, "leaf width (m)");
  add(c, "droop", 0.6, "midrib droop angle (rad)");
  add(c, "jitter", 0.0005, "position jitter (m)");
  add(c, "petiole-radius", 0.01, "radius of the petiole circle (m)");
}

SynthPlantParams synth_params(const json& cfg) {
  SynthPlantParams p;
  p.n_leaves = get<int>(cfg, "leaves");
  p.points_per_leaf = get<int>(cfg, "points_per_leaf");
  p.stem_points = get<int>(cfg, "stem_points");
  p.leaf_length = get<double>(cfg, "leaf_length");
  p.leaf_width = get<double>(cfg, "leaf_width");
  p.droop_angle = get<double>(cfg, "droop");
  p.position_jitter = get<double>(cfg, "jitter");
  p.petiole_radius = get<double>(cfg, "petiole_radius");
  p.seed = get<std::uint64_t>(cfg, "seed");
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Subcommands.

int cmd_synth(const json& cfg) {
  const auto out = need_path(cfg, "output", "-o");
  const auto params = synth_params(cfg);
  echo_config(cfg, out);
  write_cloud(synth_plant(params), out);
  return kOk;
}

json draw_json(const StandardDraw& d) {
  return json{{"axis", d.axis}, {"angle", d.angle}, {"offset", d.offset}, {"erase_center", d.erase_center},
              {"erased", d.erased}};
}

int cmd_augment(const json& cfg) {
  const auto in = need_path(cfg, "input", "-i");
  const auto out = need_path(cfg, "output", "-o");
  ViewConfig vc;
  vc.n_views = get<int>(cfg, "views");
  vc.seed = get<std::uint64_t>(cfg, "seed");
  vc.n_points = get<std::uint64_t>(cfg, "points");
  vc.occlusion = get<bool>(cfg, "occlusion");
  vc.occlusion_params.k_ellipses = get<int>(cfg, "k_ellipses");
  vc.occlusion_params.delta = get_array<2>(cfg, "delta");
  vc.erase_fraction = get<double>(cfg, "erase");
  vc.rotation_max = get<double>(cfg, "rotate");
  vc.translation_max = get<double>(cfg, "translate");
  vc.jitter = get<double>(cfg, "jitter");
  vc.distortion = get<bool>(cfg, "distortion");
  vc.distortion_params.theta_max = get_array<3>(cfg, "theta_max");
  vc.distortion_params.about_origin = get<bool>(cfg, "about_origin");
  vc.validate();
  const auto out2 = get<std::string>(cfg, "output2");
  if (vc.n_views == 2 && out2.empty()) throw InputError("--out2 is required with --views 2");
  echo_config(cfg, out);

  const PointCloud cloud = read_cloud(in);
  ViewDraws draws;
  const Views views = make_views(cloud, vc, &draws);
  write_cloud(views.views[0], out);
  if (vc.n_views == 2) write_cloud(views.views[1], out2);
  const auto index_path = get<std::string>(cfg, "indices");
  if (!index_path.empty()) {
    std::string text = "view_index,source_index\n";
    for (std::size_t i = 0; i < views.indices.size(); ++i) {
      detail::append_int(text, static_cast<std::int64_t>(i));
      text += ',';
      detail::append_int(text, static_cast<std::int64_t>(views.indices[i]));
      text += '\n';
    }
    log("wrote index map to " + write_text(index_path, text));
  }
  if (get<bool>(cfg, "record_draws")) {
    json d;
    d["ellipses"] = json::array();
    for (const auto& e : draws.ellipses) {
      d["ellipses"].push_back({{"center_x", e.center_x}, {"center_y", e.center_y}, {"semi_x", e.semi_x},
                               {"semi_y", e.semi_y}});
    }
    d["erase"] = draws.erase ? draw_json(*draws.erase) : json(nullptr);
    d["views"] = json::array();
    for (const auto& v : draws.views) {
      json jv;
      jv["distortion_fractions"] = v.distortion ? json(*v.distortion) : json(nullptr);
      jv["rotation"] = v.rotation ? draw_json(*v.rotation) : json(nullptr);
      jv["translation"] = v.translation ? draw_json(*v.translation) : json(nullptr);
      d["views"].push_back(jv);
    }
    // Re-echo the config with what was sampled; --config skips this key.
    json with_draws = cfg;
    with_draws["draws"] = d;
    echo_config(with_draws, out);
  }
  return kOk;
}

int cmd_graph(const json& cfg) {
  const auto in = need_path(cfg, "input", "-i");
  const auto out = need_path(cfg, "output", "-o");
  echo_config(cfg, out);
  const PointCloud cloud = read_cloud(in);
  const KnnGraph g = build_knn_graph(cloud, get<int>(cfg, "k"), get<double>(cfg, "tau"));
  save_graph(g, out);
  log("wrote " + std::to_string(g.edges.size()) + " edges to " + out);
  return kOk;
}

DistanceMatrix compute_distances(const PointCloud& cloud, const json& cfg) {
  const DistanceMethod method = distance_method_from_name(get<std::string>(cfg, "method"));
  const int k = get<int>(cfg, "k");
  const double tau = get<double>(cfg, "tau");
  switch (method) {
    case DistanceMethod::euclidean: return euclidean_distance_matrix(cloud);
    case DistanceMethod::sparse: return apsp_sparse(build_knn_graph(cloud, k, tau));
    case DistanceMethod::floyd_warshall: {
      FloydWarshallOptions opts;
      opts.block = get<std::uint64_t>(cfg, "block");
      if (opts.block == 0) throw InputError("--block must be >= 1");
      return floyd_warshall(init_distance_matrix(build_knn_graph(cloud, k, tau)), opts);
    }
  }
  throw InputError("unknown distance method");
}

int cmd_distances(const json& cfg) {
  const auto in = need_path(cfg, "input", "-i");
  const auto out = need_path(cfg, "output", "-o");
  distance_method_from_name(get<std::string>(cfg, "method"));
  echo_config(cfg, out);
  const PointCloud cloud = read_cloud(in);
  write_matrix(compute_distances(cloud, cfg), out);
  return kOk;
}

int cmd_similarity(const json& cfg) {
  const auto out = need_path(cfg, "output", "-o");
  const auto in = get<std::string>(cfg, "input");
  const auto dist_path = get<std::string>(cfg, "distances");
  if (in.empty() == dist_path.empty()) throw InputError("give exactly one of -i <cloud> or --distances <matrix>");
  const double eps = get<double>(cfg, "epsilon");
  if (!(eps > 0.0)) throw InputError("--epsilon must be > 0");
  distance_method_from_name(get<std::string>(cfg, "method"));
  echo_config(cfg, out);
  DistanceMatrix d;
  if (!dist_path.empty()) {
    d = as_distance_matrix(load_matrix(dist_path, matrix_format_from_path(dist_path)));
    log("loaded distances from " + dist_path);
  } else {
    d = compute_distances(read_cloud(in), cfg);
  }
  write_matrix(similarity_matrix(d, eps), out);
  return kOk;
}

int cmd_loss(const json& cfg) {
  const auto in = need_path(cfg, "input", "-i");
  const auto e0_path = need_path(cfg, "embeddings", "--embeddings");
  const auto e1_path = get<std::string>(cfg, "embeddings2");
  const LossConfig lc = loss_config(cfg, e1_path.empty() ? 1 : 2);
  const auto out = get<std::string>(cfg, "output");
  const auto grad_path = get<std::string>(cfg, "gradient");
  const std::string anchor = !out.empty() ? out : grad_path;
  if (anchor.empty()) {
    std::cerr << cfg.dump(2) << '\n';
  } else {
    echo_config(cfg, anchor);
  }

  const PointCloud cloud = read_cloud(in);
  std::vector<Embeddings> views{read_embeddings(e0_path, cloud.size())};
  if (!e1_path.empty()) views.push_back(read_embeddings(e1_path, cloud.size()));
  // Cloud, target and embeddings share one subsample.
  const Subsample sub = subsample(cloud, lc.n_points, derive_seed(get<std::uint64_t>(cfg, "seed"), 1));
  if (sub.cloud.size() != cloud.size()) {
    for (auto& v : views) {
      Embeddings s(sub.indices.size(), v.dim());
      for (std::size_t i = 0; i < sub.indices.size(); ++i) {
        std::copy(v.row(sub.indices[i]).begin(), v.row(sub.indices[i]).end(), s.row(i).begin());
      }
      v = std::move(s);
    }
    log("subsampled to " + std::to_string(sub.cloud.size()) + " points");
  }
  const SimilarityMatrix target = build_target(sub.cloud, lc);
  const double loss = contrastive_loss(views, target, lc);
  std::string text;
  detail::append_double(text, loss);
  std::cout << text << '\n';
  if (!out.empty()) log("wrote loss to " + write_text(out, text + '\n'));
  if (!grad_path.empty()) {
    const auto grads = loss_gradient(views, target, lc);
    write_matrix(grads[0], grad_path);
    if (grads.size() == 2) {
      const auto ext = grad_path.substr(strip_ext(grad_path).size());
      write_matrix(grads[1], strip_ext(grad_path) + ".view1" + ext);
    }
  }
  return kOk;
}

int cmd_optimize(const json& cfg) {
  const auto in = need_path(cfg, "input", "-i");
  const auto out = need_path(cfg, "output", "-o");
  const LossConfig lc = loss_config(cfg, 1);
  OptimizeOptions oo;
  oo.dim = get<std::uint64_t>(cfg, "dim");
  oo.steps = get<int>(cfg, "iterations");
  oo.learning_rate = get<double>(cfg, "lr");
  oo.seed = get<std::uint64_t>(cfg, "seed");
  if (oo.dim == 0) throw InputError("--dim must be >= 1");
  if (oo.steps < 0) throw InputError("--iterations must be >= 0");
  auto trace_path = get<std::string>(cfg, "trace");
  if (trace_path.empty()) trace_path = strip_ext(out) + ".trace.csv";
  echo_config(cfg, out);

  const PointCloud cloud = read_cloud(in);
  const Subsample sub = subsample(cloud, lc.n_points, derive_seed(oo.seed, 1));
  const auto sub_path = get<std::string>(cfg, "cloud_out");
  if (!sub_path.empty()) write_cloud(sub.cloud, sub_path);
  log("optimizing " + std::to_string(sub.cloud.size()) + " embeddings for " + std::to_string(oo.steps) + " steps");
  const OptimizeResult r = optimize_embeddings(sub.cloud, lc, oo);
  write_matrix(r.embeddings, out);
  std::string text = "step,loss\n";
  for (std::size_t i = 0; i < r.loss_trace.size(); ++i) {
    detail::append_int(text, static_cast<std::int64_t>(i));
    text += ',';
    detail::append_double(text, r.loss_trace[i]);
    text += '\n';
  }
  log("wrote loss trace to " + write_text(trace_path, text));
  return kOk;
}

int cmd_cluster(const json& cfg) {
  const auto in = need_path(cfg, "input", "-i");
  const auto out = need_path(cfg, "output", "-o");
  const auto e_path = get<std::string>(cfg, "embeddings");
  const ClusterMethod method = cluster_method_from_name(get<std::string>(cfg, "method"));
  const PostprocessConfig pc = post_config(cfg);
  const auto features = get<std::string>(cfg, "features");
  if (features != "embeddings" && features != "positions") {
    throw InputError("unknown --features '" + features + "' (expected embeddings or positions)");
  }
  const bool needs_embeddings = !(method == ClusterMethod::dbscan && features == "positions");
  if (needs_embeddings && e_path.empty()) throw InputError("--embeddings is required for method " + to_string(method));
  echo_config(cfg, out);

  const PointCloud cloud = read_cloud(in);
  InstanceAssignment a;
  if (method == ClusterMethod::dbscan) {
    const Matrix f = features == "positions" ? position_features(cloud) : read_embeddings(e_path, cloud.size());
    a = dbscan(f, get<double>(cfg, "eps"), get<int>(cfg, "min_pts"));
  } else {
    SweepConfig sc;
    sc.postprocess = pc;
    a = run_cluster_method(method, cloud, read_embeddings(e_path, cloud.size()), sc);
  }
  if (a.fallback) log("graph cut found no seeds; fell back to one agglomerative pass");
  save_assignment(a, out);
  log("wrote " + std::to_string(a.instance_count()) + " instances to " + out);
  return kOk;
}

int cmd_eval(const json& cfg) {
  const auto in = need_path(cfg, "input", "-i");
  const auto pred_path = need_path(cfg, "pred", "--pred");
  const auto out = get<std::string>(cfg, "output");
  if (!out.empty()) echo_config(cfg, out);
  const PointCloud cloud = read_cloud(in);
  if (!cloud.has_labels()) throw InputError(in + ": cloud has no label column");
  const InstanceAssignment pred = load_assignment(pred_path);
  if (pred.ids.size() != cloud.size()) throw InputError(pred_path + ": assignment size differs from the cloud");
  const APResult r = mean_average_precision(pred, *cloud.labels);
  json j;
  j["map"] = r.map;
  j["ap50"] = r.ap50;
  j["per_threshold"] = json::array();
  for (const auto& d : r.per_threshold) {
    j["per_threshold"].push_back({{"threshold", d.threshold}, {"ap", d.ap}, {"tp", d.true_positives},
                                  {"fp", d.false_positives}, {"fn", d.false_negatives}});
  }
  std::string line = "map=";
  detail::append_double(line, r.map);
  line += " ap50=";
  detail::append_double(line, r.ap50);
  std::cout << line << '\n';
  if (!out.empty()) {
    write_json(j, out);
    log("wrote report to " + out);
  }
  return kOk;
}

int cmd_sweep(const json& cfg) {
  const auto out = need_path(cfg, "output", "-o");
  SweepConfig sc;
  sc.methods.clear();
  for (const auto& m : get<std::vector<std::string>>(cfg, "methods")) sc.methods.push_back(cluster_method_from_name(m));
  sc.kinds.clear();
  for (const auto& k : get<std::vector<std::string>>(cfg, "noise")) sc.kinds.push_back(noise_kind_from_name(k));
  sc.magnitudes = get<std::vector<double>>(cfg, "magnitudes");
  sc.reps = get<int>(cfg, "reps");
  sc.seed = get<std::uint64_t>(cfg, "seed");
  sc.dim = get<std::uint64_t>(cfg, "dim");
  sc.sigma = get<double>(cfg, "sigma");
  sc.postprocess = post_config(cfg);
  sc.dbscan_eps = get<double>(cfg, "eps");
  sc.dbscan_min_pts = get<int>(cfg, "min_pts");
  sc.validate();
  const auto in = get<std::string>(cfg, "input");
  const SynthPlantParams sp = synth_params(cfg);
  auto summary_path = get<std::string>(cfg, "summary");
  if (summary_path.empty()) summary_path = strip_ext(out) + ".summary.csv";
  auto plot_path = get<std::string>(cfg, "plot");
  if (plot_path.empty()) plot_path = strip_ext(out) + ".svg";
  echo_config(cfg, out);

  PointCloud cloud;
  if (in.empty()) {
    cloud = synth_plant(sp);
    log("synthesized a " + std::to_string(sp.n_leaves) + "-leaf plant with " + std::to_string(cloud.size()) +
        " points");
  } else {
    cloud = read_cloud(in);
  }
  log("sweeping " + std::to_string(sc.methods.size() * sc.kinds.size() * sc.magnitudes.size() * sc.reps) + " cells");
  const auto rows = noise_sweep(cloud, sc);
  save_sweep(rows, out);
  log("wrote " + std::to_string(rows.size()) + " rows to " + out);
  save_summary(summarize(rows), summary_path);
  log("wrote summary to " + summary_path);
  emit_plot(rows, plot_path);
  log("wrote plot to " + plot_path);
  return kOk;
}

void add_io(Command& c, bool input, bool output) {
  if (input) add(c, "-i,--input", "input", "", "input point cloud (.csv or .ply)");
  if (output) add(c, "-o,--output", "output", "", "output path");
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"leafseg: geodesic contrastive targets and leaf-instance postprocessing for plant point clouds"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "expand help for every subcommand");

  std::string config_path;
  app.add_option("--config", config_path, "JSON config; explicit flags override its values");
  Command root;
  root.app = &app;
  add(root, "seed", std::uint64_t{0}, "base random seed");
  add(root, "threads", 0, "thread cap for parallel kernels (0 = LEAFSEG_THREADS or all cores)");

  std::list<Command> commands;
  auto make = [&](const std::string& name, const std::string& help, std::function<int(const json&)> body) -> Command& {
    Command& c = commands.emplace_back();
    c.name = name;
    c.app = app.add_subcommand(name, help);
    c.body = std::move(body);
    return c;
  };

  {
    Command& c = make("synth", "generate a labeled synthetic rosette plant", cmd_synth);
    add_io(c, false, true);
    add_synth_params(c, 3);
  }
  {
    Command& c = make("augment", "build index-aligned augmented views", cmd_augment);
    add_io(c, true, true);
    add(c, "--out2", "output2", "", "second view output (with --views 2)");
    add(c, "indices", "", "write the view-to-input index map CSV here");
    add(c, "views", 1, "number of views (1 or 2)");
    add(c, "points", std::uint64_t{0}, "subsample size (0 keeps all points)");
    add(c, "occlusion", false, "enable elliptical leaf occlusion");
    add(c, "k-ellipses", 2, "occlusion ellipses");
    add(c, "delta", json::array({0.1, 0.05}), "max major,minor semi-axis (m)");
    add(c, "erase", 0.0, "fraction of points erased around a random point");
    add(c, "rotate", 0.0, "max rigid rotation angle (rad)");
    add(c, "translate", 0.0, "max translation per axis (m)");
    add(c, "jitter", 0.0, "per-point jitter (m)");
    add(c, "distortion", false, "enable distance-scaled leaf distortion");
    add(c, "theta-max", json::array({0.2, 0.2, 0.5}), "max Euler angles alpha,beta,gamma (rad)");
    add(c, "about-origin", false, "distort about the world origin instead of the plant center");
    add(c, "record-draws", false, "write sampled augmentation values next to the output");
  }
  {
    Command& c = make("graph", "build the kNN graph (edge list CSV)", cmd_graph);
    add_io(c, true, true);
    add_graph_params(c);
  }
  {
    Command& c = make("distances", "all-pairs distance matrix", cmd_distances);
    add_io(c, true, true);
    add(c, "method", "fw", "fw, sparse or euclidean");
    add(c, "block", std::uint64_t{64}, "Floyd-Warshall tile size");
    add_graph_params(c);
  }
  {
    Command& c = make("similarity", "similarity target from distances", cmd_similarity);
    add_io(c, true, true);
    add(c, "distances", "", "precomputed distance matrix instead of -i");
    add(c, "method", "fw", "fw, sparse or euclidean");
    add(c, "block", std::uint64_t{64}, "Floyd-Warshall tile size");
    add(c, "epsilon", kDefaultEpsilon, "similarity epsilon");
    add_graph_params(c);
  }
  {
    Command& c = make("loss", "evaluate the contrastive loss for given embeddings", cmd_loss);
    add_io(c, true, true);
    add(c, "embeddings", "", "embeddings of view 0 (.csv or .bin)");
    add(c, "embeddings2", "", "embeddings of view 1 (enables two-view mode)");
    add(c, "gradient", "", "write the gradient here");
    add_loss_params(c);
  }
  {
    Command& c = make("optimize", "optimize embeddings directly against the loss", cmd_optimize);
    add_io(c, true, true);
    add(c, "trace", "", "loss trace CSV [<output stem>.trace.csv]");
    add(c, "cloud-out", "", "write the subsampled cloud the embeddings belong to");
    add(c, "dim", std::uint64_t{3}, "embedding size");
    add(c, "iterations", 500, "gradient steps");
    add(c, "lr", 50.0, "learning rate");
    add_loss_params(c);
  }
  {
    Command& c = make("cluster", "extract leaf instances from embeddings", cmd_cluster);
    add_io(c, true, true);
    add(c, "embeddings", "", "per-point embeddings (.csv or .bin)");
    add(c, "method", "radius", "radius, graphcut, dbscan or agglomerative");
    add(c, "features", "embeddings", "dbscan features: embeddings or positions");
    add(c, "eps", 0.5, "dbscan neighborhood radius");
    add(c, "min-pts", 5, "dbscan core threshold");
    add_post_params(c);
  }
  {
    Command& c = make("eval", "score an instance assignment against labels", cmd_eval);
    add_io(c, true, true);
    add(c, "pred", "", "predicted assignment CSV");
  }
  {
    Command& c = make("sweep", "noise sweep over perfect embeddings", cmd_sweep);
    add_io(c, true, true);
    add(c, "summary", "", "summary CSV [<output stem>.summary.csv]");
    add(c, "plot", "", "SVG plot [<output stem>.svg]");
    add(c, "methods", json::array({"radius", "graphcut", "dbscan"}), "comma-separated clustering methods");
    add(c, "noise", json::array({"uniform", "gaussian_center"}), "comma-separated noise kinds");
    add(c, "magnitudes", json::array({0.0, 0.2, 0.4, 0.6}), "comma-separated noise magnitudes");
    add(c, "reps", 5, "repetitions per cell");
    add(c, "dim", std::uint64_t{0}, "embedding size (0 = instance count)");
    add(c, "sigma", 0.0, "gaussian_center sigma in m (0 = r_init/2)");
    add(c, "eps", 0.5, "dbscan neighborhood radius");
    add(c, "min-pts", 5, "dbscan core threshold");
    add_post_params(c);
    add_synth_params(c, 4);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, std::cout, std::cerr);
    return code == 0 ? kOk : kInputError;
  }

  try {
    for (Command& c : commands) {
      if (!c.app->parsed()) continue;
      const json cfg = resolve(c, root.params, config_path);
      const int threads = get<int>(cfg, "threads");
      if (threads < 0) throw InputError("--threads must be >= 0");
      if (threads > 0) set_thread_limit(threads);
      log(c.name + " (simd: " + std::string(simd::isa_name(simd::kernels().isa)) + ")");
      return c.body(cfg);
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kInputError;
}

}  // namespace leafseg::cli
