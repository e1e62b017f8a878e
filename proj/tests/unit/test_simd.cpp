// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "leafseg/geodesy.hpp"
#include "leafseg/simd/kernels.hpp"

using namespace leafseg;
using namespace leafseg::simd;

namespace {

// Reference semantics written out independently of the library.
void ref_min_plus(std::vector<double>& dst, const std::vector<double>& src, double bias) {
  for (std::size_t j = 0; j < dst.size(); ++j) {
    const double cand = bias + src[j];
    if (cand < dst[j]) dst[j] = cand;
  }
}

std::vector<double> random_row(std::mt19937_64& rng, std::size_t n, double inf_share) {
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::bernoulli_distribution inf(inf_share);
  std::vector<double> v(n);
  for (double& x : v) x = inf(rng) ? kUnreachable : u(rng);
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct RestoreIsa {
  Isa saved = kernels().isa;
  ~RestoreIsa() { force_isa(saved); }
};

}  // namespace

TEST_CASE("scalar variant is always available and listed first") {
  const auto isas = available_isas();
  REQUIRE_FALSE(isas.empty());
  CHECK(isas.front() == Isa::scalar);
  CHECK(kernels_for(Isa::scalar) != nullptr);
  CHECK(isa_from_name("avx2") == Isa::avx2);
  CHECK(isa_name(Isa::neon) == "neon");
  CHECK_THROWS(isa_from_name("sse9"));
}

TEST_CASE("min_plus_row: every variant is bitwise equal to the reference") {
  std::mt19937_64 rng(1);
  for (Isa isa : available_isas()) {
    const KernelTable& kt = *kernels_for(isa);
    INFO("isa=" << isa_name(isa));
    for (std::size_t n = 0; n <= 70; ++n) {
      for (double inf_share : {0.0, 0.3, 1.0}) {
        auto dst = random_row(rng, n, inf_share);
        const auto src = random_row(rng, n, inf_share);
        std::uniform_real_distribution<double> b(0.0, 5.0);
        const double bias = b(rng);
        auto expect = dst;
        ref_min_plus(expect, src, bias);
        kt.min_plus_row(dst.data(), src.data(), bias, n);
        CHECK(bitwise_equal(dst, expect));
      }
    }
  }
}

TEST_CASE("min_plus_row: aliased dst == src and signed zeros") {
  for (Isa isa : available_isas()) {
    const KernelTable& kt = *kernels_for(isa);
    std::vector<double> row{0.0, 1.0, kUnreachable, 3.0, 0.5, 2.0, 7.0, 0.25, 9.0};
    auto expect = row;
    ref_min_plus(expect, std::vector<double>(row), 0.0);
    kt.min_plus_row(row.data(), row.data(), 0.0, row.size());
    CHECK(bitwise_equal(row, expect));

    // -0.0 vs +0.0: the reference keeps dst unless cand is strictly smaller.
    std::vector<double> z{0.0, -0.0, 0.0, -0.0, 0.0, -0.0, 0.0, -0.0, 0.0};
    std::vector<double> zs{-0.0, 0.0, -0.0, 0.0, -0.0, 0.0, -0.0, 0.0, -0.0};
    auto zexp = z;
    ref_min_plus(zexp, zs, 0.0);
    kt.min_plus_row(z.data(), zs.data(), 0.0, z.size());
    CHECK(bitwise_equal(z, zexp));
  }
}

TEST_CASE("axpy: bitwise equal across variants (no contraction)") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (std::size_t n = 0; n <= 45; ++n) {
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    const double alpha = u(rng);
    std::vector<double> expect = y;
    for (std::size_t i = 0; i < n; ++i) {
      const double prod = alpha * x[i];
      expect[i] = expect[i] + prod;
    }
    for (Isa isa : available_isas()) {
      auto got = y;
      kernels_for(isa)->axpy(alpha, x.data(), got.data(), n);
      CHECK(bitwise_equal(got, expect));
    }
  }
}

TEST_CASE("dot: variants agree with a compensated reference") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n = 0; n <= 300; n += 7) {
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    long double ref = 0.0L, mag = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      ref += static_cast<long double>(a[i]) * b[i];
      mag += std::abs(static_cast<long double>(a[i]) * b[i]);
    }
    for (Isa isa : available_isas()) {
      const double got = kernels_for(isa)->dot(a.data(), b.data(), n);
      CHECK(std::abs(got - static_cast<double>(ref)) <= 4.0 * n * 1.1e-16 * static_cast<double>(mag) + 1e-300);
    }
  }
}

TEST_CASE("floyd_warshall is bitwise identical under every variant") {
  RestoreIsa restore;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  PointCloud c;
  for (int i = 0; i < 257; ++i) {
    c.positions.push_back({u(rng), u(rng), u(rng)});
    c.colors.push_back({0, 0, 0});
  }
  const DistanceMatrix d0 = init_distance_matrix(build_knn_graph(c, 6, 0.025));
  force_isa(Isa::scalar);
  const DistanceMatrix ref = floyd_warshall(d0, {32, 1});
  for (Isa isa : available_isas()) {
    force_isa(isa);
    CHECK(kernels().isa == isa);
    CHECK(floyd_warshall(d0, {32, 2}) == ref);
  }
}
