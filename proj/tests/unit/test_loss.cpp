// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "leafseg/error.hpp"
#include "leafseg/loss.hpp"
#include "oracles.hpp"

using namespace leafseg;

namespace {

Embeddings random_embeddings(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Embeddings e(n, d);
  for (double& v : e.data()) v = g(rng);
  return e;
}

PointCloud random_cloud(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 0.04);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    c.positions.push_back({u(rng), u(rng), u(rng)});
    c.colors.push_back({0, 0, 0});
  }
  return c;
}

double loss_of(std::vector<Embeddings> views, const SimilarityMatrix& t, const LossConfig& cfg) {
  return contrastive_loss(views, t, cfg);
}

}  // namespace

TEST_CASE("normalize_embeddings") {
  Embeddings e(2, 2);
  e(0, 0) = 3;
  e(0, 1) = 4;
  e(1, 0) = 1;
  const Embeddings n = normalize_embeddings(e);
  CHECK(n(0, 0) == doctest::Approx(0.6));
  CHECK(n(0, 1) == doctest::Approx(0.8));
  CHECK(n(1, 0) == 1.0);
  CHECK(n(1, 1) == 0.0);
  Embeddings z(3, 2, 1.0);
  z(1, 0) = z(1, 1) = 0.0;
  try {
    normalize_embeddings(z);
    FAIL("expected an error");
  } catch (const InputError& err) {
    CHECK(std::string(err.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("cross_similarity") {
  Embeddings eye(3, 3);
  for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
  const Matrix c = cross_similarity(eye, eye);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(c(i, j) == (i == j ? 1.0 : 0.0));
  Embeddings same(4, 2);
  for (int i = 0; i < 4; ++i) same(i, 0) = 1.0;
  const Matrix ones = cross_similarity(same, same);
  for (double v : ones.data()) CHECK(v == 1.0);
  CHECK_THROWS_AS(cross_similarity(Embeddings(2, 2), Embeddings(3, 2)), InputError);
  CHECK_THROWS_AS(cross_similarity(Embeddings(2, 2), Embeddings(2, 3)), InputError);
}

TEST_CASE("contrastive_loss: hand-expanded 2x2 cases") {
  LossConfig cfg;
  cfg.reduction = Reduction::sum;
  // Identical rows, identity target: two off-diagonal (0 - 1)^2 terms.
  Embeddings same(2, 2);
  same(0, 0) = same(1, 0) = 1.0;
  SimilarityMatrix eye(2);
  eye(0, 0) = eye(1, 1) = 1.0;
  CHECK(loss_of({same}, eye, cfg) == doctest::Approx(2.0));
  // Orthogonal rows, spatial target with off-diagonal s: 2 s^2.
  Embeddings orth(2, 2);
  orth(0, 0) = orth(1, 1) = 1.0;
  SimilarityMatrix s = eye;
  s(0, 1) = s(1, 0) = 0.3;
  CHECK(loss_of({orth}, s, cfg) == doctest::Approx(2 * 0.09));
  // Mean reduction divides by N^2, and the masked mean by N^2 - N.
  cfg.reduction = Reduction::mean;
  CHECK(loss_of({orth}, s, cfg) == doctest::Approx(2 * 0.09 / 4));
  cfg.mask_diagonal = true;
  CHECK(loss_of({orth}, s, cfg) == doctest::Approx(2 * 0.09 / 2));
  // Perfect match.
  cfg.mask_diagonal = false;
  CHECK(loss_of({orth}, eye, cfg) == 0.0);
  // Absolute and literal discrepancy.
  cfg.reduction = Reduction::sum;
  cfg.discrepancy = Discrepancy::absolute;
  CHECK(loss_of({same}, eye, cfg) == doctest::Approx(2.0));
  cfg.discrepancy = Discrepancy::literal;
  CHECK(loss_of({same}, eye, cfg) == doctest::Approx(-2.0));
}

TEST_CASE("contrastive_loss: input errors") {
  LossConfig cfg;
  SimilarityMatrix t(2);
  Embeddings e(2, 2, 1.0);
  e(0, 0) = std::nan("");
  CHECK_THROWS_AS(loss_of({e}, t, cfg), InputError);
  CHECK_THROWS_AS(loss_of({Embeddings(3, 2, 1.0)}, t, cfg), InputError);
  CHECK_THROWS_AS(loss_of({Embeddings(2, 2, 1.0), Embeddings(2, 2, 1.0)}, t, cfg), InputError);  // n_views = 1
  cfg.n_views = 3;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("loss_gradient matches central differences") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + trial % 7;
    const std::size_t d = 1 + trial % 4;
    LossConfig cfg;
    cfg.target = static_cast<TargetKind>(trial % 3);
    cfg.n_views = 1 + (trial / 3) % 2;
    cfg.epsilon = 0.01;
    cfg.mask_diagonal = trial % 5 == 0;
    cfg.reduction = trial % 4 == 0 ? Reduction::sum : Reduction::mean;
    const SimilarityMatrix t = build_target(random_cloud(rng, n), cfg);
    std::vector<Embeddings> views;
    for (int v = 0; v < cfg.n_views; ++v) views.push_back(random_embeddings(rng, n, d));
    const auto grad = loss_gradient(views, t, cfg);
    for (int v = 0; v < cfg.n_views; ++v) {
      std::vector<double> x(views[v].data().begin(), views[v].data().end());
      auto f = [&](const std::vector<double>& xs) {
        auto w = views;
        std::copy(xs.begin(), xs.end(), w[v].data().begin());
        return loss_of(w, t, cfg);
      };
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double fd = oracle::central_difference(f, x, i, 1e-5);
        const double an = grad[v].data()[i];
        CHECK(std::abs(fd - an) <= 1e-5 * std::max({std::abs(fd), std::abs(an), 1e-4}));
      }
    }
  }
}

TEST_CASE("gradient: zero at a perfect fit, orthogonal to each row") {
  LossConfig cfg;
  cfg.target = TargetKind::identity;
  Embeddings eye(3, 3);
  for (int i = 0; i < 3; ++i) eye(i, i) = 2.0 + i;
  SimilarityMatrix t(3);
  for (int i = 0; i < 3; ++i) t(i, i) = 1.0;
  const Embeddings zero = loss_gradient(std::vector<Embeddings>{eye}, t, cfg)[0];
  for (double g : zero.data()) CHECK(g == 0.0);

  std::mt19937_64 rng(12);
  const Embeddings e = random_embeddings(rng, 6, 3);
  SimilarityMatrix full(6, 0.2);
  for (int i = 0; i < 6; ++i) full(i, i) = 1.0;
  const auto g = loss_gradient(std::vector<Embeddings>{e}, full, cfg)[0];
  for (std::size_t i = 0; i < 6; ++i) {
    double dotp = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      dotp += g(i, k) * e(i, k);
      scale += std::abs(g(i, k) * e(i, k));
    }
    CHECK(std::abs(dotp) <= 1e-12 * std::max(scale, 1e-12));
  }
}

TEST_CASE("loss: positive row scaling and two-view swap") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> s(0.01, 100.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 9, d = 1 + trial % 5;
    LossConfig cfg;
    cfg.target = static_cast<TargetKind>(trial % 3);
    cfg.n_views = 2;
    const SimilarityMatrix t = build_target(random_cloud(rng, n), cfg);
    const Embeddings a = random_embeddings(rng, n, d), b = random_embeddings(rng, n, d);
    const double base = loss_of({a, b}, t, cfg);
    Embeddings a2 = a;
    for (std::size_t i = 0; i < n; ++i) {
      const double k = s(rng);
      for (double& v : a2.row(i)) v *= k;
    }
    CHECK(loss_of({a2, b}, t, cfg) == doctest::Approx(base).epsilon(1e-9));
    CHECK(loss_of({b, a}, t, cfg) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("identity target, one view, N = D = 2: zero loss exactly on orthonormal rows") {
  LossConfig cfg;
  cfg.target = TargetKind::identity;
  SimilarityMatrix t(2);
  t(0, 0) = t(1, 1) = 1.0;
  const int steps = 72;  // 5 degree grid
  for (int a = 0; a < steps; ++a) {
    for (int b = 0; b < steps; ++b) {
      const double ta = 2 * std::numbers::pi * a / steps, tb = 2 * std::numbers::pi * b / steps;
      Embeddings e(2, 2);
      e(0, 0) = std::cos(ta);
      e(0, 1) = std::sin(ta);
      e(1, 0) = std::cos(tb);
      e(1, 1) = std::sin(tb);
      const double l = loss_of({e}, t, cfg);
      const int diff = ((a - b) % steps + steps) % steps;
      const bool orthogonal = diff == steps / 4 || diff == 3 * steps / 4;
      if (orthogonal) CHECK(l < 1e-30);
      else CHECK(l > 1e-6);
    }
  }
}

TEST_CASE("build_target") {
  std::mt19937_64 rng(14);
  const PointCloud c = random_cloud(rng, 12);
  LossConfig cfg;
  cfg.target = TargetKind::identity;
  const SimilarityMatrix eye = build_target(c, cfg);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) CHECK(eye(i, j) == (i == j ? 1.0 : 0.0));
  cfg.target = TargetKind::euclidean;
  cfg.epsilon = 0.01;
  const SimilarityMatrix se = build_target(c, cfg);
  CHECK(se(0, 1) == doctest::Approx(0.01 / (distance(c.positions[0], c.positions[1]) + 0.01)));
  CHECK(target_kind_from_name("point-to-point") == TargetKind::identity);
  CHECK_THROWS_AS(target_kind_from_name("x"), InputError);
}

TEST_CASE("optimize_embeddings") {
  SynthPlantParams sp;
  sp.points_per_leaf = 40;
  sp.seed = 2;
  const PointCloud plant = synth_plant(sp);
  LossConfig cfg;
  cfg.epsilon = 0.05;
  OptimizeOptions oo;
  oo.steps = 500;
  oo.learning_rate = 50.0;
  oo.seed = 3;
  SUBCASE("loss goes down") {
    const OptimizeResult r = optimize_embeddings(plant, cfg, oo);
    REQUIRE(r.loss_trace.size() == 501);
    CHECK(r.loss_trace.back() < r.loss_trace.front());
    CHECK(r.embeddings.rows() == plant.size());
    CHECK(r.embeddings.dim() == 3);
  }
  SUBCASE("zero learning rate keeps the normalized initialization") {
    oo.learning_rate = 0.0;
    oo.steps = 5;
    const OptimizeResult r = optimize_embeddings(plant, cfg, oo);
    oo.steps = 0;
    const OptimizeResult r0 = optimize_embeddings(plant, cfg, oo);
    CHECK(r.embeddings == r0.embeddings);
    for (double l : r.loss_trace) CHECK(l == r.loss_trace.front());
  }
  SUBCASE("two far-apart clusters separate") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 0.02);
    PointCloud c;
    for (int i = 0; i < 60; ++i) {
      const double off = i < 30 ? 0.0 : 1.0;
      c.positions.push_back({off + u(rng), u(rng), u(rng)});
      c.colors.push_back({0, 0, 0});
    }
    const OptimizeResult r = optimize_embeddings(c, cfg, oo);
    const Embeddings u_ = normalize_embeddings(r.embeddings);
    double within = 0.0, across = 0.0;
    int nw = 0, na = 0;
    for (int i = 0; i < 60; ++i) {
      for (int j = i + 1; j < 60; ++j) {
        double dotp = 0.0;
        for (int k = 0; k < 3; ++k) dotp += u_(i, k) * u_(j, k);
        if ((i < 30) == (j < 30)) {
          within += dotp;
          ++nw;
        } else {
          across += dotp;
          ++na;
        }
      }
    }
    CHECK(across / na < within / nw);
  }
  SUBCASE("divergence is a runtime error") {
    cfg.discrepancy = Discrepancy::literal;
    cfg.reduction = Reduction::sum;
    oo.learning_rate = 1e300;
    oo.steps = 50;
    CHECK_THROWS_AS(optimize_embeddings(plant, cfg, oo), RuntimeError);
  }
}
