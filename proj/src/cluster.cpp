// SPDX-License-Identifier: Apache-2.0
#include "leafseg/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "leafseg/error.hpp"
#include "leafseg/simd/kernels.hpp"
#include "maxflow.hpp"
#include "text_io.hpp"

namespace leafseg {

bool InstanceAssignment::valid() const {
  std::vector<bool> used(confidence.size(), false);
  for (std::int64_t id : ids) {
    if (id == kNoise) continue;
    if (id < 0 || static_cast<std::size_t>(id) >= confidence.size()) return false;
    used[static_cast<std::size_t>(id)] = true;
  }
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (!used[i] || !(confidence[i] >= 0.0 && confidence[i] <= 1.0)) return false;
  }
  return true;
}

void save_assignment(const InstanceAssignment& a, const std::string& path) {
  std::string out = "point_index,instance_id,confidence\n";
  for (std::size_t i = 0; i < a.ids.size(); ++i) {
    detail::append_int(out, static_cast<std::int64_t>(i));
    out += ',';
    detail::append_int(out, a.ids[i]);
    out += ',';
    detail::append_double(out, a.ids[i] == kNoise ? 0.0 : a.confidence[static_cast<std::size_t>(a.ids[i])]);
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeError(path + ": cannot open for writing");
  f << out;
  if (!f) throw RuntimeError(path + ": write failed");
}

InstanceAssignment load_assignment(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError(path + ": cannot open for reading");
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(f, line) || detail::trim(line) != "point_index,instance_id,confidence") {
    throw InputError(detail::where(path, 1) + "expected header point_index,instance_id,confidence");
  }
  InstanceAssignment a;
  std::map<std::int64_t, double> conf;
  while (std::getline(f, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto tok = detail::split(line, ',');
    if (tok.size() != 3) throw InputError(detail::where(path, line_no) + "expected 3 columns");
    const auto idx = detail::parse_int(tok[0], path, line_no);
    if (idx != static_cast<std::int64_t>(a.ids.size())) {
      throw InputError(detail::where(path, line_no) + "point_index out of sequence");
    }
    const auto id = detail::parse_int(tok[1], path, line_no);
    const double c = detail::parse_double(tok[2], path, line_no);
    if (id < kNoise) throw InputError(detail::where(path, line_no) + "invalid instance id");
    a.ids.push_back(id);
    if (id != kNoise) conf[id] = c;
  }
  if (!conf.empty()) {
    a.confidence.assign(static_cast<std::size_t>(conf.rbegin()->first + 1), 0.0);
    for (const auto& [id, c] : conf) a.confidence[static_cast<std::size_t>(id)] = c;
  }
  if (!a.valid()) throw InputError(path + ": instance ids must be contiguous from 0 with confidences in [0,1]");
  return a;
}

void PostprocessConfig::validate() const {
  if (steps < 1) throw InputError("postprocess: steps must be >= 1");
  if (k < 1) throw InputError("postprocess: k must be >= 1");
  if (!(tau > 0.0)) throw InputError("postprocess: tau must be > 0");
  if (std::isnan(merge_threshold) || std::isnan(agglomerative_threshold)) {
    throw InputError("postprocess: thresholds must be numbers");
  }
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const auto& kt = simd::kernels();
  const double na = kt.dot(a.data(), a.data(), a.size());
  const double nb = kt.dot(b.data(), b.data(), b.size());
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(kt.dot(a.data(), b.data(), a.size()) / std::sqrt(na * nb), -1.0, 1.0);
}

namespace {

using Group = std::vector<std::size_t>;

// Average-linkage agglomeration of the given rows. Groups come back sorted
// by their smallest member, members ascending.
std::vector<Group> agglomerate(const Embeddings& e, const std::vector<std::size_t>& rows, double gamma_agg) {
  const std::size_t m = rows.size();
  std::vector<Group> groups(m);
  for (std::size_t i = 0; i < m; ++i) groups[i] = {rows[i]};
  if (m <= 1) return groups;

  std::vector<double> sim(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double s = cosine_similarity(e.row(rows[i]), e.row(rows[j]));
      sim[i * m + j] = s;
      sim[j * m + i] = s;
    }
  }
  std::vector<double> size(m, 1.0);
  std::vector<bool> active(m, true);
  std::vector<std::size_t> best(m, m);
  std::vector<double> best_sim(m, -std::numeric_limits<double>::infinity());

  auto refresh = [&](std::size_t i) {
    best[i] = m;
    best_sim[i] = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i || !active[j]) continue;
      if (sim[i * m + j] > best_sim[i]) {
        best_sim[i] = sim[i * m + j];
        best[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < m; ++i) refresh(i);

  while (true) {
    // Lowest i with the maximal partner similarity; its best[] is already the
    // lowest partner, so this is the lexicographically smallest maximal pair.
    std::size_t a = m;
    for (std::size_t i = 0; i < m; ++i) {
      if (!active[i] || best[i] == m) continue;
      if (a == m || best_sim[i] > best_sim[a]) a = i;
    }
    if (a == m || best_sim[a] < gamma_agg) break;
    std::size_t b = best[a];
    if (b < a) std::swap(a, b);

    const double sa = size[a], sb = size[b];
    for (std::size_t x = 0; x < m; ++x) {
      if (!active[x] || x == a || x == b) continue;
      const double s = (sa * sim[a * m + x] + sb * sim[b * m + x]) / (sa + sb);
      sim[a * m + x] = s;
      sim[x * m + a] = s;
    }
    size[a] = sa + sb;
    active[b] = false;
    groups[a].insert(groups[a].end(), groups[b].begin(), groups[b].end());
    groups[b].clear();

    refresh(a);
    for (std::size_t x = 0; x < m; ++x) {
      if (!active[x] || x == a) continue;
      if (best[x] == a || best[x] == b) {
        refresh(x);
      } else {
        const double s = sim[x * m + a];
        if (s > best_sim[x] || (s == best_sim[x] && a < best[x])) {
          best_sim[x] = s;
          best[x] = a;
        }
      }
    }
  }

  std::vector<Group> out;
  for (std::size_t i = 0; i < m; ++i) {
    if (!active[i]) continue;
    std::sort(groups[i].begin(), groups[i].end());
    out.push_back(std::move(groups[i]));
  }
  std::sort(out.begin(), out.end(), [](const Group& x, const Group& y) { return x.front() < y.front(); });
  return out;
}

struct Instance {
  std::vector<double> sum;
  std::size_t count = 0;
  Group members;

  std::vector<double> mean() const {
    std::vector<double> m(sum);
    for (double& v : m) v /= static_cast<double>(count);
    return m;
  }
};

Instance make_instance(const Embeddings& e, const Group& members) {
  Instance inst;
  inst.sum.assign(e.dim(), 0.0);
  const auto& kt = simd::kernels();
  for (std::size_t i : members) kt.axpy(1.0, e.row(i).data(), inst.sum.data(), e.dim());
  inst.count = members.size();
  inst.members = members;
  return inst;
}

void absorb(Instance& into, const Instance& from) {
  for (std::size_t d = 0; d < into.sum.size(); ++d) into.sum[d] += from.sum[d];
  into.count += from.count;
  into.members.insert(into.members.end(), from.members.begin(), from.members.end());
}

// Index of the instance whose mean is most similar to `mean` (ties: lowest),
// or instances.size() when there are none.
std::pair<std::size_t, double> most_similar(const std::vector<Instance>& instances, const std::vector<double>& mean) {
  std::size_t best = instances.size();
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const double s = cosine_similarity(mean, instances[i].mean());
    if (s > best_sim) {
      best_sim = s;
      best = i;
    }
  }
  return {best, best_sim};
}

InstanceAssignment to_assignment(const std::vector<Instance>& instances, const Embeddings& e, std::size_t n) {
  InstanceAssignment out;
  out.ids.assign(n, kNoise);
  for (const Instance& inst : instances) {
    if (inst.count == 0) continue;
    const auto id = static_cast<std::int64_t>(out.confidence.size());
    const auto mean = inst.mean();
    double total = 0.0;
    for (std::size_t i : inst.members) {
      out.ids[i] = id;
      total += cosine_similarity(e.row(i), mean);
    }
    out.confidence.push_back(std::clamp(total / static_cast<double>(inst.count), 0.0, 1.0));
  }
  return out;
}

void check_aligned(const PointCloud& cloud, const Embeddings& e, const char* who) {
  if (cloud.size() != e.rows()) {
    throw InputError(std::string(who) + ": cloud has " + std::to_string(cloud.size()) + " points but embeddings have " +
                     std::to_string(e.rows()) + " rows");
  }
  if (cloud.empty()) throw InputError(std::string(who) + ": empty cloud");
}

std::vector<double> radial_distances(const PointCloud& cloud, const Vec3& center, RadialPlane plane) {
  std::vector<double> r(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 d = cloud.positions[i] - center;
    r[i] = plane == RadialPlane::xy ? std::hypot(d[0], d[1]) : norm(d);
  }
  return r;
}

}  // namespace

InstanceAssignment agglomerative_cluster(const Embeddings& embeddings, double gamma_agg) {
  std::vector<std::size_t> rows(embeddings.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::vector<Instance> instances;
  for (const Group& g : agglomerate(embeddings, rows, gamma_agg)) instances.push_back(make_instance(embeddings, g));
  return to_assignment(instances, embeddings, embeddings.rows());
}

InitialRadius initial_radius(const PointCloud& cloud) {
  InitialRadius out;
  out.center = plant_center(cloud);
  double dx = 0.0, dy = 0.0;
  for (const auto& p : cloud.positions) {
    dx = std::max(dx, std::abs(p[0] - out.center[0]));
    dy = std::max(dy, std::abs(p[1] - out.center[1]));
  }
  out.radius = std::min(dx, dy) / 2.0;
  return out;
}

InstanceAssignment radius_decremental_cluster(const PointCloud& cloud, const Embeddings& embeddings,
                                              const PostprocessConfig& config) {
  config.validate();
  check_aligned(cloud, embeddings, "radius_decremental_cluster");
  const std::size_t n = cloud.size();
  const InitialRadius init = initial_radius(cloud);
  const auto radial = radial_distances(cloud, init.center, config.radial_plane);

  std::vector<bool> assigned(n, false);
  std::vector<Instance> instances;
  for (int t = 0; t <= config.steps; ++t) {
    const bool last = t == config.steps;
    const double r = init.radius * (1.0 - static_cast<double>(t) / config.steps);
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < n; ++i) {
      if (!assigned[i] && (last || radial[i] > r)) pending.push_back(i);
    }
    if (pending.empty()) continue;
    for (std::size_t i : pending) assigned[i] = true;
    for (const Group& g : agglomerate(embeddings, pending, config.agglomerative_threshold)) {
      Instance fresh = make_instance(embeddings, g);
      const auto [best, s] = most_similar(instances, fresh.mean());
      if (best < instances.size() && s >= config.merge_threshold) {
        absorb(instances[best], fresh);
      } else {
        instances.push_back(std::move(fresh));
      }
    }
  }
  return to_assignment(instances, embeddings, n);
}

InstanceAssignment graph_cut_cluster(const PointCloud& cloud, const Embeddings& embeddings,
                                     const PostprocessConfig& config) {
  config.validate();
  check_aligned(cloud, embeddings, "graph_cut_cluster");
  const std::size_t n = cloud.size();
  const InitialRadius init = initial_radius(cloud);
  const auto radial = radial_distances(cloud, init.center, config.radial_plane);

  std::vector<std::size_t> tips;
  if (init.radius > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (radial[i] > init.radius) tips.push_back(i);
    }
  }
  if (tips.empty()) {
    InstanceAssignment a = agglomerative_cluster(embeddings, config.agglomerative_threshold);
    a.fallback = true;
    return a;
  }
  const std::vector<Group> seeds = agglomerate(embeddings, tips, config.agglomerative_threshold);

  std::vector<std::int64_t> owner(n, kNoise);
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    for (std::size_t i : seeds[s]) owner[i] = static_cast<std::int64_t>(s);
  }

  const KnnGraph graph = build_knn_graph(cloud, config.k, config.tau);
  std::vector<double> capacity(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    capacity[e] = std::max(0.0, cosine_similarity(embeddings.row(graph.edges[e].u), embeddings.row(graph.edges[e].v)));
  }

  if (seeds.size() > 1) {
    const std::size_t source = n;
    const std::size_t sink = n + 1;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      detail::MaxFlow flow(n + 2);
      for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        flow.add_edge(graph.edges[e].u, graph.edges[e].v, capacity[e], capacity[e]);
      }
      for (std::size_t t = 0; t < seeds.size(); ++t) {
        for (std::size_t i : seeds[t]) {
          if (t == s) {
            flow.add_edge(source, i, detail::MaxFlow::kInfinite);
          } else {
            flow.add_edge(i, sink, detail::MaxFlow::kInfinite);
          }
        }
      }
      flow.solve(source, sink);
      const auto side = flow.source_side(source);
      for (std::size_t i = 0; i < n; ++i) {
        if (side[i] && owner[i] == kNoise) owner[i] = static_cast<std::int64_t>(s);
      }
    }
  } else {
    std::fill(owner.begin(), owner.end(), 0);
  }

  std::vector<Instance> regions;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    Group members;
    for (std::size_t i = 0; i < n; ++i) {
      if (owner[i] == static_cast<std::int64_t>(s)) members.push_back(i);
    }
    regions.push_back(make_instance(embeddings, members));
  }
  // Points no cut reached: nearest region by mean embedding.
  std::vector<std::vector<double>> means;
  for (const auto& r : regions) means.push_back(r.mean());
  for (std::size_t i = 0; i < n; ++i) {
    if (owner[i] != kNoise) continue;
    std::size_t best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < means.size(); ++s) {
      const double sim = cosine_similarity(embeddings.row(i), means[s]);
      if (sim > best_sim) {
        best_sim = sim;
        best = s;
      }
    }
    owner[i] = static_cast<std::int64_t>(best);
  }
  regions.clear();
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    Group members;
    for (std::size_t i = 0; i < n; ++i) {
      if (owner[i] == static_cast<std::int64_t>(s)) members.push_back(i);
    }
    regions.push_back(make_instance(embeddings, members));
  }

  std::vector<Instance> merged;
  for (Instance& r : regions) {
    const auto [best, s] = most_similar(merged, r.mean());
    if (best < merged.size() && s >= config.merge_threshold) {
      absorb(merged[best], r);
    } else {
      merged.push_back(std::move(r));
    }
  }
  return to_assignment(merged, embeddings, n);
}

InstanceAssignment dbscan(const Matrix& features, double eps, int min_pts) {
  if (!(eps > 0.0)) throw InputError("dbscan: eps must be > 0");
  if (min_pts < 1) throw InputError("dbscan: min_pts must be >= 1");
  const std::size_t n = features.rows();
  const std::size_t dim = features.cols();
  const double eps_sq = eps * eps;

  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = features.row(i);
    for (std::size_t j = i; j < n; ++j) {
      const auto b = features.row(j);
      double sq = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = a[d] - b[d];
        sq += diff * diff;
      }
      if (sq <= eps_sq) {
        neighbors[i].push_back(j);
        if (j != i) neighbors[j].push_back(i);
      }
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = neighbors[i].size() >= static_cast<std::size_t>(min_pts);

  InstanceAssignment out;
  out.ids.assign(n, kNoise);
  std::int64_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || out.ids[i] != kNoise) continue;
    const std::int64_t id = next++;
    std::vector<std::size_t> stack{i};
    out.ids[i] = id;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      if (!core[u]) continue;
      for (std::size_t v : neighbors[u]) {
        if (out.ids[v] != kNoise) continue;
        out.ids[v] = id;
        stack.push_back(v);
      }
    }
  }
  std::vector<double> total(static_cast<std::size_t>(next), 0.0);
  std::vector<double> noisy(static_cast<std::size_t>(next), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (out.ids[i] == kNoise) continue;
    const auto id = static_cast<std::size_t>(out.ids[i]);
    for (std::size_t v : neighbors[i]) {
      if (v == i) continue;
      total[id] += 1.0;
      if (out.ids[v] == kNoise) noisy[id] += 1.0;
    }
  }
  out.confidence.resize(static_cast<std::size_t>(next));
  for (std::size_t c = 0; c < out.confidence.size(); ++c) {
    const double frac = total[c] > 0.0 ? noisy[c] / total[c] : 0.0;
    out.confidence[c] = std::max(0.5, 1.0 - frac);
  }
  return out;
}

Matrix position_features(const PointCloud& cloud) {
  Matrix m(cloud.size(), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int c = 0; c < 3; ++c) m(i, c) = cloud.positions[i][c];
  }
  return m;
}

ClusterMethod cluster_method_from_name(const std::string& name) {
  if (name == "radius") return ClusterMethod::radius;
  if (name == "graphcut") return ClusterMethod::graphcut;
  if (name == "dbscan") return ClusterMethod::dbscan;
  if (name == "agglomerative") return ClusterMethod::agglomerative;
  throw InputError("unknown cluster method '" + name + "' (expected radius, graphcut, dbscan or agglomerative)");
}

std::string to_string(ClusterMethod method) {
  switch (method) {
    case ClusterMethod::radius: return "radius";
    case ClusterMethod::graphcut: return "graphcut";
    case ClusterMethod::dbscan: return "dbscan";
    case ClusterMethod::agglomerative: return "agglomerative";
  }
  return "?";
}

}  // namespace leafseg
