// SPDX-License-Identifier: Apache-2.0
#include "leafseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <tuple>

#include "leafseg/error.hpp"
#include "leafseg/rng.hpp"
#include "text_io.hpp"

namespace leafseg {

Embeddings perfect_embeddings(const PointCloud& cloud, std::size_t dim) {
  if (!cloud.has_labels()) throw InputError("perfect_embeddings: cloud has no labels");
  std::map<std::int64_t, std::size_t> slot;
  for (std::int64_t l : *cloud.labels) slot.emplace(l, 0);
  if (dim < slot.size()) {
    throw InputError("perfect_embeddings: dim " + std::to_string(dim) + " < " + std::to_string(slot.size()) +
                     " instances");
  }
  std::size_t next = 0;
  for (auto& [label, s] : slot) s = next++;
  Embeddings e(cloud.size(), dim);
  for (std::size_t i = 0; i < cloud.size(); ++i) e(i, slot[(*cloud.labels)[i]]) = 1.0;
  return e;
}

NoiseKind noise_kind_from_name(const std::string& name) {
  if (name == "uniform") return NoiseKind::uniform;
  if (name == "gaussian_center") return NoiseKind::gaussian_center;
  throw InputError("unknown noise kind '" + name + "' (expected uniform or gaussian_center)");
}

std::string to_string(NoiseKind kind) { return kind == NoiseKind::uniform ? "uniform" : "gaussian_center"; }

double noise_envelope(double magnitude, double sigma, double d) {
  if (!(sigma > 0.0)) return d == 0.0 ? magnitude : 0.0;
  return magnitude * std::exp(-(d * d) / (2.0 * sigma * sigma));
}

Embeddings add_noise(const Embeddings& e, const PointCloud& cloud, const NoiseConfig& config) {
  if (!(config.magnitude >= 0.0)) throw InputError("add_noise: magnitude must be >= 0");
  if (e.rows() != cloud.size()) throw InputError("add_noise: embeddings and cloud sizes differ");
  Embeddings out = e;
  if (config.magnitude == 0.0 || e.empty()) return out;
  Rng rng(config.seed);
  std::vector<double> scale(e.rows(), config.magnitude);
  if (config.kind == NoiseKind::gaussian_center) {
    const InitialRadius init = initial_radius(cloud);
    const double sigma = config.sigma > 0.0 ? config.sigma : init.radius / 2.0;
    for (std::size_t i = 0; i < e.rows(); ++i) {
      const Vec3 d = cloud.positions[i] - init.center;
      scale[i] = noise_envelope(config.magnitude, sigma, std::hypot(d[0], d[1]));
    }
  }
  for (std::size_t i = 0; i < e.rows(); ++i) {
    for (double& v : out.row(i)) v += rng.uniform(-scale[i], scale[i]);
  }
  return out;
}

double instance_iou(const std::set<std::size_t>& pred, const std::set<std::size_t>& gt) {
  if (pred.empty() && gt.empty()) throw InputError("instance_iou: both sets are empty");
  std::size_t inter = 0;
  for (std::size_t i : pred) inter += gt.count(i);
  return static_cast<double>(inter) / static_cast<double>(pred.size() + gt.size() - inter);
}

double average_precision(const InstanceAssignment& pred, const std::vector<std::int64_t>& gt, double iou_threshold,
                         ThresholdDetail* detail) {
  if (pred.ids.size() != gt.size()) throw InputError("average_precision: prediction and ground truth sizes differ");
  // Dense relabeling of ground truth.
  std::map<std::int64_t, std::size_t> gt_slot;
  for (std::int64_t l : gt) {
    if (l >= 0) gt_slot.emplace(l, 0);
  }
  std::size_t g = 0;
  for (auto& [label, s] : gt_slot) s = g++;
  const std::size_t p = pred.instance_count();

  std::vector<std::size_t> gt_size(g, 0), pred_size(p, 0);
  std::vector<std::size_t> inter(p * g, 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const bool has_gt = gt[i] >= 0;
    const bool has_pred = pred.ids[i] != kNoise;
    const std::size_t gs = has_gt ? gt_slot[gt[i]] : 0;
    const std::size_t ps = has_pred ? static_cast<std::size_t>(pred.ids[i]) : 0;
    if (has_gt) ++gt_size[gs];
    if (has_pred) ++pred_size[ps];
    if (has_gt && has_pred) ++inter[ps * g + gs];
  }

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pred.confidence[a] > pred.confidence[b]; });

  std::vector<bool> matched(g, false);
  std::vector<bool> is_tp(p, false);
  std::size_t tp = 0;
  for (std::size_t rank = 0; rank < p; ++rank) {
    const std::size_t q = order[rank];
    std::size_t best = g;
    double best_iou = -1.0;
    for (std::size_t k = 0; k < g; ++k) {
      if (matched[k]) continue;
      const std::size_t in = inter[q * g + k];
      const double iou = static_cast<double>(in) / static_cast<double>(pred_size[q] + gt_size[k] - in);
      if (iou > best_iou) {
        best_iou = iou;
        best = k;
      }
    }
    if (best < g && best_iou >= iou_threshold) {
      matched[best] = true;
      is_tp[rank] = true;
      ++tp;
    }
  }

  double ap = 0.0;
  if (g > 0 && p > 0) {
    // Precision envelope from the right, then one term per recall step.
    std::vector<double> precision(p);
    std::size_t running = 0;
    for (std::size_t rank = 0; rank < p; ++rank) {
      running += is_tp[rank] ? 1 : 0;
      precision[rank] = static_cast<double>(running) / static_cast<double>(rank + 1);
    }
    for (std::size_t rank = p - 1; rank-- > 0;) precision[rank] = std::max(precision[rank], precision[rank + 1]);
    // Sum first, divide once: a perfect ranking scores exactly 1.
    for (std::size_t rank = 0; rank < p; ++rank) {
      if (is_tp[rank]) ap += precision[rank];
    }
    ap /= static_cast<double>(g);
  }
  if (detail != nullptr) {
    detail->threshold = iou_threshold;
    detail->ap = ap;
    detail->true_positives = tp;
    detail->false_positives = p - tp;
    detail->false_negatives = g - tp;
  }
  return ap;
}

std::vector<double> map_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

APResult mean_average_precision(const InstanceAssignment& pred, const std::vector<std::int64_t>& gt) {
  APResult r;
  double sum = 0.0;
  for (double thr : map_thresholds()) {
    ThresholdDetail d;
    average_precision(pred, gt, thr, &d);
    sum += d.ap;
    r.per_threshold.push_back(d);
  }
  r.map = sum / static_cast<double>(r.per_threshold.size());
  r.ap50 = r.per_threshold.front().ap;
  return r;
}

void SweepConfig::validate() const {
  if (methods.empty() || kinds.empty() || magnitudes.empty()) throw InputError("sweep: empty method/noise/magnitude list");
  if (reps < 1) throw InputError("sweep: reps must be >= 1");
  for (double m : magnitudes) {
    if (!(m >= 0.0)) throw InputError("sweep: magnitudes must be >= 0");
  }
  postprocess.validate();
}

InstanceAssignment run_cluster_method(ClusterMethod method, const PointCloud& cloud, const Embeddings& embeddings,
                                      const SweepConfig& config) {
  switch (method) {
    case ClusterMethod::radius: return radius_decremental_cluster(cloud, embeddings, config.postprocess);
    case ClusterMethod::graphcut: return graph_cut_cluster(cloud, embeddings, config.postprocess);
    case ClusterMethod::dbscan: return dbscan(embeddings, config.dbscan_eps, config.dbscan_min_pts);
    case ClusterMethod::agglomerative: return agglomerative_cluster(embeddings, config.postprocess.agglomerative_threshold);
  }
  throw InputError("unknown cluster method");
}

std::vector<SweepRow> noise_sweep(const PointCloud& cloud, const SweepConfig& config) {
  config.validate();
  if (!cloud.has_labels()) throw InputError("noise_sweep: cloud has no labels");
  std::set<std::int64_t> labels(cloud.labels->begin(), cloud.labels->end());
  const std::size_t dim = config.dim > 0 ? config.dim : labels.size();
  const Embeddings perfect = perfect_embeddings(cloud, dim);

  std::vector<SweepRow> rows;
  std::uint64_t cell = 0;
  for (NoiseKind kind : config.kinds) {
    for (double magnitude : config.magnitudes) {
      for (int rep = 0; rep < config.reps; ++rep, ++cell) {
        NoiseConfig nc{kind, magnitude, config.sigma, derive_seed(config.seed, cell)};
        const Embeddings noisy = add_noise(perfect, cloud, nc);
        for (ClusterMethod method : config.methods) {
          const InstanceAssignment a = run_cluster_method(method, cloud, noisy, config);
          const APResult r = mean_average_precision(a, *cloud.labels);
          rows.push_back({to_string(method), to_string(kind), magnitude, rep, r.map, r.ap50});
        }
      }
    }
  }
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.method, a.noise_kind, a.magnitude, a.rep) < std::tie(b.method, b.noise_kind, b.magnitude, b.rep);
  });
  return rows;
}

std::vector<SweepSummaryRow> summarize(const std::vector<SweepRow>& rows) {
  std::map<std::tuple<std::string, std::string, double>, std::vector<const SweepRow*>> groups;
  for (const auto& r : rows) groups[{r.method, r.noise_kind, r.magnitude}].push_back(&r);
  std::vector<SweepSummaryRow> out;
  for (const auto& [key, members] : groups) {
    SweepSummaryRow s;
    std::tie(s.method, s.noise_kind, s.magnitude) = key;
    const double n = static_cast<double>(members.size());
    for (const SweepRow* r : members) {
      s.map_mean += r->map / n;
      s.ap50_mean += r->ap50 / n;
    }
    if (members.size() > 1) {
      double vm = 0.0, va = 0.0;
      for (const SweepRow* r : members) {
        vm += (r->map - s.map_mean) * (r->map - s.map_mean);
        va += (r->ap50 - s.ap50_mean) * (r->ap50 - s.ap50_mean);
      }
      s.map_std = std::sqrt(vm / (n - 1.0));
      s.ap50_std = std::sqrt(va / (n - 1.0));
    }
    out.push_back(s);
  }
  return out;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeError(path + ": cannot open for writing");
  f << text;
  if (!f) throw RuntimeError(path + ": write failed");
}

}  // namespace

void save_sweep(const std::vector<SweepRow>& rows, const std::string& path) {
  std::string out = "method,noise_kind,magnitude,rep,map,ap50\n";
  for (const auto& r : rows) {
    out += r.method + ',' + r.noise_kind + ',';
    detail::append_double(out, r.magnitude);
    out += ',';
    detail::append_int(out, r.rep);
    out += ',';
    detail::append_double(out, r.map);
    out += ',';
    detail::append_double(out, r.ap50);
    out += '\n';
  }
  write_text(path, out);
}

std::vector<SweepRow> load_sweep(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError(path + ": cannot open for reading");
  std::string line;
  if (!std::getline(f, line) || detail::trim(line) != "method,noise_kind,magnitude,rep,map,ap50") {
    throw InputError(detail::where(path, 1) + "expected header method,noise_kind,magnitude,rep,map,ap50");
  }
  std::vector<SweepRow> rows;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto tok = detail::split(line, ',');
    if (tok.size() != 6) throw InputError(detail::where(path, line_no) + "expected 6 columns");
    SweepRow r;
    r.method = std::string(tok[0]);
    r.noise_kind = std::string(tok[1]);
    if (r.method.empty() || r.noise_kind.empty()) throw InputError(detail::where(path, line_no) + "empty name");
    r.magnitude = detail::parse_double(tok[2], path, line_no);
    r.rep = static_cast<int>(detail::parse_int(tok[3], path, line_no));
    r.map = detail::parse_double(tok[4], path, line_no);
    r.ap50 = detail::parse_double(tok[5], path, line_no);
    if (!std::isfinite(r.magnitude) || !std::isfinite(r.map) || !std::isfinite(r.ap50)) {
      throw InputError(detail::where(path, line_no) + "non-finite value");
    }
    rows.push_back(r);
  }
  return rows;
}

void save_summary(const std::vector<SweepSummaryRow>& rows, const std::string& path) {
  std::string out = "method,noise_kind,magnitude,map_mean,map_std,ap50_mean,ap50_std\n";
  for (const auto& r : rows) {
    out += r.method + ',' + r.noise_kind + ',';
    for (double v : {r.magnitude, r.map_mean, r.map_std, r.ap50_mean}) {
      detail::append_double(out, v);
      out += ',';
    }
    detail::append_double(out, r.ap50_std);
    out += '\n';
  }
  write_text(path, out);
}

}  // namespace leafseg
