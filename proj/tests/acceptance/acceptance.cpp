// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and sizes
// are fixed here; `--criterion N` runs a single one.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "leafseg/augment.hpp"
#include "leafseg/cloud.hpp"
#include "leafseg/cluster.hpp"
#include "leafseg/eval.hpp"
#include "leafseg/geodesy.hpp"
#include "leafseg/loss.hpp"
#include "leafseg/parallel.hpp"
#include "oracles.hpp"

using namespace leafseg;

namespace {

// Pinned tolerances and budgets.
constexpr int kApspCases = 1200;
constexpr double kSparseTol = 1e-9;
constexpr double kApspBudget = 60.0;
constexpr int kGradientInstances = 100;
constexpr double kGradientRel = 1e-5;
constexpr double kGradientFloor = 1e-4;  // |g| below this is compared absolutely (1e-9)
constexpr double kGradientStep = 1e-5;
constexpr double kGradientBudget = 30.0;
constexpr int kLossInstances = 120;
constexpr double kScalingRel = 1e-9;
constexpr double kSwapRel = 1e-12;
constexpr double kDistortionRel = 1e-9;
constexpr int kEllipsePairs = 10000;
constexpr int kRecoveryPlants = 20;
constexpr double kRecoveryBudget = 60.0;
constexpr int kNoiseReps = 5;
constexpr double kGraphCutSlack = 0.02;
constexpr double kNoiseBudget = 300.0;
constexpr int kDemoSteps = 1000;
constexpr double kDemoAp50 = 0.8;
constexpr int kDemoOracleSeeds = 10;
constexpr int kDemoOracleNeeded = 8;
constexpr double kDemoBudget = 120.0;
constexpr double kDemoEpsilon = 0.05;
constexpr double kDemoLearningRate = 50.0;
constexpr std::size_t kPerfN = 1500;
constexpr double kPerfBudget = 10.0;
constexpr double kPerfSpeedup = 2.0;
constexpr int kApCases = 600;

struct Outcome {
  bool pass = true;
  std::ostringstream note;
  void require(bool ok, const std::string& what) {
    if (!ok && pass) note << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PointCloud random_points(std::mt19937_64& rng, std::size_t n, double extent) {
  std::uniform_real_distribution<double> u(0.0, extent);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    c.positions.push_back({u(rng), u(rng), u(rng)});
    c.colors.push_back({0, 0, 0});
  }
  return c;
}

Embeddings random_embeddings(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Embeddings e(n, d);
  for (double& v : e.data()) v = g(rng);
  return e;
}

PointCloud fixture_plant(int index) {
  SynthPlantParams p;
  p.n_leaves = 3 + index % 6;
  p.points_per_leaf = 100;
  p.stem_points = 10;
  p.seed = 1000 + static_cast<std::uint64_t>(index);
  return synth_plant(p);
}

bool same_bits(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data().begin(), a.data().end(), b.data().begin(),
                    [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; });
}

// 1. APSP correctness.
void criterion_1(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  const std::size_t blocks[] = {1, 2, 3, 64};
  for (int t = 0; t < kApspCases; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(t % 7);
    const oracle::SmallGraph g = oracle::random_connected_graph(rng, n);
    const std::vector<double> want = oracle::enumerate_paths(g);
    FloydWarshallOptions opt;
    opt.block = blocks[t % 4];
    const DistanceMatrix got = floyd_warshall(oracle::to_distance_matrix(g), opt);
    o.require(std::equal(want.begin(), want.end(), got.data().begin()), "fw vs enumeration, case " + std::to_string(t));
  }
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 10 + static_cast<std::size_t>(t) * 10;  // up to 200
    const PointCloud c = random_points(rng, n, 0.08);
    const KnnGraph g = build_knn_graph(c, 1 + t % 7, 0.02 + 0.005 * (t % 4));
    const DistanceMatrix fw = floyd_warshall(init_distance_matrix(g));
    const DistanceMatrix sp = apsp_sparse(g);
    for (std::size_t i = 0; i < fw.data().size(); ++i) {
      const double a = fw.data()[i], b = sp.data()[i];
      if (std::isinf(a) || std::isinf(b)) {
        o.require(a == b, "fw vs sparse reachability");
      } else {
        worst = std::max(worst, std::abs(a - b));
      }
    }
  }
  o.require(worst <= kSparseTol, "fw vs sparse max diff");
  const double s = seconds_since(t0);
  o.require(s < kApspBudget, "runtime");
  o.note << kApspCases << " enumeration cases, 20 kNN graphs (N<=200), max |fw-sparse|=" << worst << ", " << s
         << " s";
}

// 2. Similarity target contract.
void criterion_2(Outcome& o) {
  std::mt19937_64 rng(2);
  std::size_t checked = 0;
  for (int t = 0; t < 40; ++t) {
    const PointCloud c = random_points(rng, 20 + 4 * t, 0.1);
    const DistanceMatrix d = floyd_warshall(init_distance_matrix(build_knn_graph(c, 3, 0.02)));
    const double eps = t % 2 ? 0.01 : kDefaultEpsilon;
    const SimilarityMatrix s = similarity_matrix(d, eps);
    const std::size_t n = d.rows();
    std::vector<std::pair<double, double>> finite;
    for (std::size_t r = 0; r < n; ++r) {
      o.require(s(r, r) == 1.0, "unit diagonal");
      for (std::size_t k = 0; k < n; ++k) {
        o.require(s(r, k) == s(k, r), "symmetry");
        if (std::isinf(d(r, k))) {
          o.require(s(r, k) == 0.0, "zero at inf");
        } else {
          o.require(s(r, k) > 0.0 && s(r, k) <= 1.0, "range");
          finite.emplace_back(d(r, k), s(r, k));
        }
      }
    }
    std::sort(finite.begin(), finite.end());
    for (std::size_t i = 1; i < finite.size(); ++i) {
      if (finite[i].first > finite[i - 1].first) {
        o.require(finite[i].second < finite[i - 1].second, "strictly antitone");
      } else {
        o.require(finite[i].second == finite[i - 1].second, "equal distances, equal similarity");
      }
    }
    checked += n * n;
  }
  o.note << "40 matrices, " << checked << " entries";
}

// 3. Gradient check.
void criterion_3(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int t = 0; t < kGradientInstances; ++t) {
    const std::size_t n = 3 + static_cast<std::size_t>(t % 6);  // N <= 8
    const std::size_t d = 1 + static_cast<std::size_t>(t % 4);  // D <= 4
    LossConfig cfg;
    cfg.target = static_cast<TargetKind>(t % 3);
    cfg.n_views = 1 + (t / 3) % 2;
    cfg.epsilon = 0.01;
    const SimilarityMatrix target = build_target(random_points(rng, n, 0.04), cfg);
    std::vector<Embeddings> views;
    for (int v = 0; v < cfg.n_views; ++v) views.push_back(random_embeddings(rng, n, d));
    const auto grad = loss_gradient(views, target, cfg);
    for (int v = 0; v < cfg.n_views; ++v) {
      const std::vector<double> x(views[v].data().begin(), views[v].data().end());
      auto f = [&](const std::vector<double>& xs) {
        auto w = views;
        std::copy(xs.begin(), xs.end(), w[v].data().begin());
        return contrastive_loss(w, target, cfg);
      };
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double fd = oracle::central_difference(f, x, i, kGradientStep);
        const double an = grad[v].data()[i];
        const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), kGradientFloor});
        worst = std::max(worst, rel);
      }
    }
  }
  o.require(worst <= kGradientRel, "relative gradient error");
  const double s = seconds_since(t0);
  o.require(s < kGradientBudget, "runtime");
  o.note << kGradientInstances << " instances, max rel err " << worst << ", " << s << " s";
}

SimilarityMatrix as_target(const Matrix& m) {
  SimilarityMatrix s(m.rows());
  std::copy(m.data().begin(), m.data().end(), s.data().begin());
  return s;
}

// 4. Loss identities.
void criterion_4(Outcome& o) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  double worst_zero = 0.0, worst_scale = 0.0, worst_swap = 0.0;
  for (int t = 0; t < kLossInstances; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(t % 12), d = 1 + static_cast<std::size_t>(t % 6);
    LossConfig cfg;
    cfg.n_views = 1 + t % 2;
    const Embeddings a = random_embeddings(rng, n, d), b = random_embeddings(rng, n, d);
    std::vector<Embeddings> views{a};
    if (cfg.n_views == 2) views.push_back(b);
    const Embeddings na = normalize_embeddings(a), nb = normalize_embeddings(b);
    const SimilarityMatrix fit = as_target(cross_similarity(na, cfg.n_views == 2 ? nb : na));
    const double zero = contrastive_loss(views, fit, cfg);
    worst_zero = std::max(worst_zero, std::abs(zero));

    cfg.n_views = 2;
    cfg.target = static_cast<TargetKind>(t % 3);
    const SimilarityMatrix target = build_target(random_points(rng, n, 0.04), cfg);
    const double base = contrastive_loss(std::vector<Embeddings>{a, b}, target, cfg);
    Embeddings a2 = a, b2 = b;
    for (std::size_t i = 0; i < n; ++i) {
      const double ka = scale(rng), kb = scale(rng);
      for (double& v : a2.row(i)) v *= ka;
      for (double& v : b2.row(i)) v *= kb;
    }
    const double scaled = contrastive_loss(std::vector<Embeddings>{a2, b2}, target, cfg);
    worst_scale = std::max(worst_scale, std::abs(scaled - base) / std::max(std::abs(base), 1e-300));
    const double swapped = contrastive_loss(std::vector<Embeddings>{b, a}, target, cfg);
    worst_swap = std::max(worst_swap, std::abs(swapped - base) / std::max(std::abs(base), 1e-300));
  }
  o.require(worst_zero == 0.0, "loss at C = T");
  o.require(worst_scale <= kScalingRel, "row scaling");
  o.require(worst_swap <= kSwapRel, "view swap");
  o.note << kLossInstances << " instances each; |loss(C=T)|max=" << worst_zero << ", scaling rel " << worst_scale
         << ", swap rel " << worst_swap;
}

// 5. Augmentation contracts.
void criterion_5(Outcome& o) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(0.0, 3.14159);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SynthPlantParams sp;
    sp.n_leaves = 2 + static_cast<int>(seed % 6);
    sp.points_per_leaf = 80;
    sp.stem_points = 10;
    sp.seed = seed;
    const PointCloud c = synth_plant(sp);
    DistortionParams p;
    p.theta_max = {ang(rng), ang(rng), ang(rng)};
    p.seed = seed;
    std::array<double, 3> f{};
    const PointCloud out = leaf_distortion(c, p, &f);
    const Vec3 center = plant_center(c);
    auto dist = [&](const Vec3& q) {
      return std::sqrt((q[0] - center[0]) * (q[0] - center[0]) + (q[1] - center[1]) * (q[1] - center[1]) +
                       (q[2] - center[2]) * (q[2] - center[2]));
    };
    std::vector<std::pair<double, std::size_t>> by_d;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double d0 = dist(c.positions[i]), d1 = dist(out.positions[i]);
      if (d0 > 0.0) worst = std::max(worst, std::abs(d1 - d0) / d0);
      by_d.emplace_back(d0, i);
    }
    std::sort(by_d.begin(), by_d.end());
    const auto angles = distortion_angles(c, f, p.theta_max);
    for (std::size_t t = 1; t < by_d.size(); ++t) {
      for (int a = 0; a < 3; ++a) {
        o.require(angles[by_d[t - 1].second][a] <= angles[by_d[t].second][a], "angle monotone in d_p");
      }
    }
  }
  o.require(worst <= kDistortionRel, "distance to center preserved");

  // Occlusion: removal iff ((x-cx)/a)^2 + ((y-cy)/b)^2 - 1 <= 0, evaluated here directly.
  std::uniform_real_distribution<double> pos(-0.2, 0.2), axis(0.001, 0.1);
  std::size_t removed = 0, mismatches = 0;
  for (int t = 0; t < kEllipsePairs; ++t) {
    const Ellipse e{pos(rng), pos(rng), axis(rng), axis(rng)};
    Vec3 q{pos(rng), pos(rng), pos(rng)};
    if (t % 10 == 0) q = {e.center_x + e.semi_x, e.center_y, 0.0};  // exactly on the boundary
    if (t % 10 == 1) q = {e.center_x, e.center_y - e.semi_y, 0.0};
    if (t % 10 == 2) q = {e.center_x + 0.5 * e.semi_x, e.center_y + 0.5 * e.semi_y, 0.0};
    PointCloud one;
    one.positions = {q};
    one.colors = {{0, 0, 0}};
    const bool gone = remove_in_ellipses(one, {e}).indices.empty();
    const double dx = (q[0] - e.center_x) / e.semi_x, dy = (q[1] - e.center_y) / e.semi_y;
    const bool inside = dx * dx + dy * dy - 1.0 <= 0.0;
    mismatches += gone != inside ? 1 : 0;
    removed += gone ? 1 : 0;
  }
  o.require(mismatches == 0, "occlusion decisions");
  o.note << "50 distortions, max rel radial change " << worst << "; " << kEllipsePairs << " ellipse pairs, "
         << removed << " removed, " << mismatches << " mismatches";
}

// 6. Overlapping leaves: geodesic vs Euclidean ordering.
void criterion_6(Outcome& o) {
  const OverlapFixture f = overlap_fixture();
  const SimilarityMatrix sg = similarity_matrix(distances_for(f.cloud, DistanceMethod::floyd_warshall));
  const SimilarityMatrix se = similarity_matrix(euclidean_distance_matrix(f.cloud));
  const auto& lab = *f.cloud.labels;
  o.require(lab[f.p2] == lab[f.p3] && lab[f.p1] != lab[f.p2], "fixture labels");
  o.require(sg(f.p2, f.p3) > sg(f.p1, f.p2), "geodesic: same leaf above cross leaf");
  o.require(se(f.p1, f.p2) > se(f.p2, f.p3), "euclidean: cross leaf above same leaf");
  o.note << "geodesic S(p2,p3)=" << sg(f.p2, f.p3) << " S(p1,p2)=" << sg(f.p1, f.p2) << "; euclidean S(p2,p3)="
         << se(f.p2, f.p3) << " S(p1,p2)=" << se(f.p1, f.p2);
}

// 7. Perfect-embedding recovery.
void criterion_7(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  PostprocessConfig cfg;
  cfg.merge_threshold = 0.9;
  cfg.steps = 4;
  int perfect = 0;
  for (int i = 0; i < kRecoveryPlants; ++i) {
    const PointCloud c = fixture_plant(i);
    const Embeddings e = perfect_embeddings(c, static_cast<std::size_t>(3 + i % 6));
    const double r = mean_average_precision(radius_decremental_cluster(c, e, cfg), *c.labels).map;
    const double g = mean_average_precision(graph_cut_cluster(c, e, cfg), *c.labels).map;
    o.require(r == 1.0, "radius on plant " + std::to_string(i));
    o.require(g == 1.0, "graph cut on plant " + std::to_string(i));
    perfect += (r == 1.0) + (g == 1.0);
  }
  const double s = seconds_since(t0);
  o.require(s < kRecoveryBudget, "runtime");
  o.note << perfect << "/" << 2 * kRecoveryPlants << " runs at mAP 1.0, " << s << " s";
}

// 8. Method ordering under center-weighted noise.
void criterion_8(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepConfig sc;
  sc.kinds = {NoiseKind::gaussian_center};
  sc.magnitudes = {0.2, 0.4, 0.6};
  sc.reps = kNoiseReps;
  sc.postprocess.merge_threshold = 0.9;
  sc.postprocess.steps = 4;
  std::map<std::pair<std::string, double>, std::pair<double, int>> acc;
  for (int i = 0; i < kRecoveryPlants; ++i) {
    sc.seed = 2000 + static_cast<std::uint64_t>(i);
    for (const SweepRow& r : noise_sweep(fixture_plant(i), sc)) {
      auto& a = acc[{r.method, r.magnitude}];
      a.first += r.map;
      a.second += 1;
    }
  }
  auto mean = [&](const std::string& m, double mag) {
    const auto& a = acc.at({m, mag});
    return a.first / a.second;
  };
  for (double mag : sc.magnitudes) {
    const double r = mean("radius", mag), g = mean("graphcut", mag), d = mean("dbscan", mag);
    o.require(r > d, "radius > dbscan at " + std::to_string(mag));
    o.require(g >= r - kGraphCutSlack, "graphcut >= radius - slack at " + std::to_string(mag));
    o.note << "m=" << mag << ": radius " << r << ", graphcut " << g << ", dbscan " << d << "; ";
  }
  const double s = seconds_since(t0);
  o.require(s < kNoiseBudget, "runtime");
  o.note << s << " s";
}

struct DemoResult {
  std::size_t instances = 0;
  double ap50 = 0.0;
  bool pass() const { return instances == 3 && ap50 >= kDemoAp50; }
};

DemoResult run_demo(std::uint64_t seed) {
  SynthPlantParams sp;
  sp.n_leaves = 3;
  sp.points_per_leaf = 133;
  sp.seed = seed;
  const PointCloud c = synth_plant(sp);
  LossConfig cfg;
  cfg.target = TargetKind::graph;
  cfg.epsilon = kDemoEpsilon;
  OptimizeOptions opt;
  opt.dim = 3;
  opt.steps = kDemoSteps;
  opt.learning_rate = kDemoLearningRate;
  opt.seed = seed;
  const OptimizeResult r = optimize_embeddings(c, cfg, opt);
  const InstanceAssignment a = radius_decremental_cluster(c, r.embeddings, PostprocessConfig{});
  return {a.instance_count(), mean_average_precision(a, *c.labels).ap50};
}

// 9. Backbone-free end-to-end demo.
void criterion_9(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  int passed = 0;
  o.note << "oracle seeds:";
  for (int s = 1; s <= kDemoOracleSeeds; ++s) {
    const DemoResult r = run_demo(static_cast<std::uint64_t>(s));
    passed += r.pass() ? 1 : 0;
    o.note << " " << r.instances << "/" << r.ap50;
  }
  o.require(passed >= kDemoOracleNeeded, "oracle seeds passing");
  const auto t1 = std::chrono::steady_clock::now();
  const DemoResult main = run_demo(0);
  const double s = seconds_since(t1);
  o.require(main.instances == 3, "instance count");
  o.require(main.ap50 >= kDemoAp50, "AP50");
  o.require(s < kDemoBudget, "runtime");
  o.note << "; oracle " << passed << "/" << kDemoOracleSeeds << "; seed 0: " << main.instances << " instances, AP50 "
         << main.ap50 << ", " << s << " s (" << seconds_since(t0) << " s with oracle)";
}

// 10. Floyd-Warshall performance and thread scaling.
void criterion_10(Outcome& o) {
  SynthPlantParams sp;
  sp.n_leaves = 6;
  sp.points_per_leaf = kPerfN / 6;
  sp.seed = 10;
  const PointCloud c = synth_plant(sp);
  const DistanceMatrix init = init_distance_matrix(build_knn_graph(c));
  FloydWarshallOptions one;
  one.threads = 1;
  auto t0 = std::chrono::steady_clock::now();
  const DistanceMatrix a = floyd_warshall(init, one);
  const double t1 = seconds_since(t0);
  FloydWarshallOptions four;
  four.threads = 4;
  t0 = std::chrono::steady_clock::now();
  const DistanceMatrix b = floyd_warshall(init, four);
  const double t4 = seconds_since(t0);
  o.require(init.rows() == kPerfN, "N");
  o.require(t1 < kPerfBudget, "single-threaded runtime");
  o.require(same_bits(a, b), "bitwise identical across thread counts");
  o.require(t1 / t4 >= kPerfSpeedup, "speedup at 4 threads");
  o.note << "N=" << init.rows() << ", 1 thread " << t1 << " s, 4 threads " << t4 << " s, speedup " << t1 / t4
         << ", hardware threads " << std::thread::hardware_concurrency();
}

// 11. AP against the brute-force matching oracle.
void criterion_11(Outcome& o) {
  std::mt19937_64 rng(11);
  int evaluations = 0;
  for (int t = 0; t < kApCases; ++t) {
    const oracle::ApCase c = oracle::random_ap_case(rng);
    const InstanceAssignment a = oracle::to_assignment(c);
    for (double thr : map_thresholds()) {
      const double got = average_precision(a, c.gt, thr);
      const oracle::ApOracle want = oracle::average_precision(c, thr);
      o.require(got == want.deterministic, "case " + std::to_string(t));
      o.require(got >= want.min && got <= want.max, "within tie range");
      ++evaluations;
    }
  }
  o.note << kApCases << " cases x 10 thresholds = " << evaluations << " exact comparisons";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leafseg acceptance suite"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-11)")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<void(Outcome&)>> all{criterion_1, criterion_2, criterion_3, criterion_4,
                                                       criterion_5, criterion_6, criterion_7, criterion_8,
                                                       criterion_9, criterion_10, criterion_11};
  bool ok = true;
  for (int n = 1; n <= 11; ++n) {
    if (only != 0 && n != only) continue;
    Outcome o;
    try {
      all[static_cast<std::size_t>(n - 1)](o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.note << "exception: " << e.what();
    }
    std::printf("criterion %d: %s %s\n", n, o.pass ? "PASS" : "FAIL", o.note.str().c_str());
    std::fflush(stdout);
    ok = ok && o.pass;
  }
  return ok ? 0 : 1;
}
