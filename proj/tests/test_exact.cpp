#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "rhodyn/exact.hpp"

using namespace rhodyn;

namespace {

ModelParams two_site_oracle() {
  ModelParams p;
  p.L = 2;
  p.J = 1.0;
  p.g = 0.0;
  p.h = 0.0;
  p.h_s = 0.5;
  return p;
}

ModelParams quench_params(int L) {
  ModelParams p;
  p.L = L;
  p.J = 1.0;
  p.g = 1.0;
  p.h = 1.0;
  p.h_s = 0.0;
  return p;
}

}  // namespace

TEST_CASE("two-site spectrum matches the hand enumeration") {
  auto s = diagonalize(two_site_oracle());
  REQUIRE(s.energies.size() == 4);
  double want[4] = {-3.0, -1.0, 2.0, 2.0};
  for (int k = 0; k < 4; ++k)
    CHECK(s.energies[k] == doctest::Approx(want[k]).epsilon(1e-12));
  // Ground state is the ket |01> = index 2.
  CHECK(std::abs(std::abs(s.vectors.at(2, 0)) - 1.0) < 1e-12);

  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double dot = 0.0;
      for (int i = 0; i < 4; ++i) dot += s.vectors.at(i, a) * s.vectors.at(i, b);
      CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-10);
    }
}

TEST_CASE("eigenpair residuals are small") {
  ModelParams p;
  p.L = 6;
  p.J = 1.0;
  p.g = 0.8;
  p.h = 0.4;
  p.h_s = 1.0 / 6.0;
  auto s = diagonalize(p);
  auto hd = hamiltonian_op(p).dense();
  std::int64_t n = hd.rows;
  for (std::int64_t k = 0; k < n; k += 7) {
    double res = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      double hv = 0.0;
      for (std::int64_t j = 0; j < n; ++j) hv += hd.at(i, j) * s.vectors.at(j, k);
      double r = hv - s.energies[static_cast<std::size_t>(k)] * s.vectors.at(i, k);
      res += r * r;
    }
    CHECK(std::sqrt(res) < 1e-8);
  }
}

TEST_CASE("diagonalize rejects bad input") {
  ModelParams p;
  p.L = 3;
  CHECK_THROWS_AS(diagonalize(p), ConfigError);
  p.L = 14;
  CHECK_THROWS_AS(diagonalize(p), CapacityError);
  // The guard is configurable in both directions.
  p.L = 4;
  p.J = 1.0;
  CHECK_THROWS_AS(diagonalize(p, 2), CapacityError);
  CHECK_NOTHROW(diagonalize_cached(p, 6));
}

TEST_CASE("diagonal Hamiltonian has coordinate eigenvectors") {
  ModelParams p;
  p.L = 4;
  p.J = 1.0;
  p.g = 0.0;
  p.h = 0.3;
  p.h_s = 0.25;
  auto s = diagonalize(p);
  for (std::int64_t k = 0; k < 16; ++k) {
    int big = 0;
    for (std::int64_t i = 0; i < 16; ++i) {
      double a = std::abs(s.vectors.at(i, k));
      if (a > 0.5) ++big;
      CHECK((a < 1e-12 || std::abs(a - 1.0) < 1e-12));
    }
    CHECK(big == 1);
  }
}

TEST_CASE("infinite-temperature state is exactly maximally mixed") {
  ModelParams p = quench_params(4);
  auto rho = thermal_density_matrix(p, 0.0);
  REQUIRE(rho.entries.size() == 16);
  for (const auto& e : rho.entries) {
    CHECK(e.m == e.n);
    CHECK(e.val == 1.0 / 16.0);
  }
  CHECK(rho.trace == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(thermal_density_matrix(p, -0.5), ConfigError);
}

TEST_CASE("deep-cold two-site state collapses onto the ground ket") {
  auto rho = thermal_density_matrix(two_site_oracle(), 50.0);
  REQUIRE(rho.entries.size() == 1);
  CHECK(rho.entries[0].m == 2);
  CHECK(rho.entries[0].n == 2);
  CHECK(rho.entries[0].val == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("thermal state is symmetric, normalized, positive semidefinite") {
  ModelParams p;
  p.L = 4;
  p.J = 1.0;
  p.g = 0.5;
  p.h = 0.0;
  p.h_s = 0.25;
  auto rho = thermal_density_matrix(p, 1.0);
  CHECK(std::abs(rho.trace - 1.0) < 1e-12);
  CHECK(rho.at(3, 9) == rho.at(9, 3));
  auto d = rho.dense();
  auto evals = linalg::eig_sym(d);
  for (double ev : evals) CHECK(ev > -1e-12);
}

TEST_CASE("expectation series: infinite temperature stays at zero") {
  ModelParams q = quench_params(4);
  auto rho = thermal_density_matrix(q, 0.0);
  Observable obs{ObsKind::StaggeredMagnetizationZ, 4};
  std::vector<double> times = {0.0, 0.4, 1.3, 2.7};
  auto ts = heisenberg_expectation(rho, obs, q, times);
  for (double v : ts.values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("expectation series: pure alternating state starts at -1") {
  DensityMatrix rho;
  rho.L = 4;
  rho.basis = Basis::Z;
  rho.source = RhoSource::Exact;
  rho.entries = {{10, 10, 1.0}};
  rho.recompute_trace();
  Observable obs{ObsKind::StaggeredMagnetizationZ, 4};
  auto ts = heisenberg_expectation(rho, obs, quench_params(4), {0.0, 0.5});
  CHECK(ts.values[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(ts.values[1]) < 1.0);
}

TEST_CASE("no quench means a constant series") {
  ModelParams p;
  p.L = 4;
  p.J = 1.0;
  p.g = 0.9;
  p.h = 0.2;
  p.h_s = 0.25;
  auto rho = thermal_density_matrix(p, 0.7);
  Observable obs{ObsKind::StaggeredMagnetizationZ, 4};
  std::vector<double> times;
  for (int i = 0; i <= 20; ++i) times.push_back(0.25 * i);
  auto ts = heisenberg_expectation(rho, obs, p, times);
  for (double v : ts.values)
    CHECK(std::abs(v - ts.values[0]) < 1e-10);
}

TEST_CASE("basis mismatch between state and quench is rejected") {
  ModelParams q = quench_params(4);
  q.basis = Basis::X;
  auto rho = thermal_density_matrix(quench_params(4), 0.5);
  Observable obs{ObsKind::MagnetizationX, 4};
  CHECK_THROWS_AS(heisenberg_expectation(rho, obs, q, {0.0}),
                  std::invalid_argument);
}

TEST_CASE("disk cache round trip is bit exact") {
  ModelParams p;
  p.L = 4;
  p.J = 1.0;
  p.g = 0.731;
  p.h = 0.177;
  p.h_s = 0.25;
  auto first = diagonalize(p);
  // Evict the memo slot so the next call must come from disk.
  for (double g : {0.11, 0.12, 0.13, 0.14}) {
    ModelParams q = p;
    q.g = g;
    diagonalize_cached(q);
  }
  auto second = diagonalize(p);
  CHECK(std::memcmp(first.energies.data(), second.energies.data(),
                    first.energies.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(first.vectors.a.data(), second.vectors.a.data(),
                    first.vectors.a.size() * sizeof(double)) == 0);
}

TEST_CASE("thermal ensemble average: infinite temperature is exactly zero") {
  ModelParams h0;
  h0.L = 4;
  h0.J = 1.0;
  h0.g = 0.5;
  h0.h_s = 0.25;
  ModelParams h1 = quench_params(4);
  CHECK(tde_average(h0, h1, {ObsKind::StaggeredMagnetizationZ, 4}, 0.0) == 0.0);
  CHECK(tde_average(h0, h1, {ObsKind::MagnetizationX, 4}, 0.0) == 0.0);
}

TEST_CASE("no quench with a diagonal observable reproduces the thermal value") {
  ModelParams h0;
  h0.L = 4;
  h0.J = 1.0;
  h0.g = 0.0;  // diagonal Hamiltonian: energy basis = computational basis
  h0.h = 0.2;
  h0.h_s = 0.25;
  Observable obs{ObsKind::StaggeredMagnetizationZ, 4};
  double tde = tde_average(h0, h0, obs, 1.0);
  auto rho = thermal_density_matrix(h0, 1.0);
  auto ts = heisenberg_expectation(rho, obs, h0, {0.0});
  CHECK(tde == doctest::Approx(ts.values[0]).epsilon(1e-8));
}

TEST_CASE("deep-cold ensemble matches the pure ground-state quench plateau") {
  ModelParams h0;
  h0.L = 4;
  h0.J = 1.0;
  h0.g = 0.5;
  h0.h = 0.0;
  h0.h_s = 0.25;
  ModelParams h1 = quench_params(4);
  Observable obs{ObsKind::StaggeredMagnetizationZ, 4};

  // Independent evaluation: diagonal-ensemble value of the pure ground state,
  // grouping the quench spectrum by rounding energies to 1e-9.
  auto s0 = diagonalize(h0);
  auto s1 = diagonalize(h1);
  std::int64_t n = 16;
  std::vector<double> gs(n), ov(n);
  for (std::int64_t i = 0; i < n; ++i) gs[i] = s0.vectors.at(i, 0);
  for (std::int64_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += s1.vectors.at(i, k) * gs[i];
    ov[k] = acc;
  }
  auto ob = observable_op(obs, Basis::Z).dense();
  linalg::DMat b(n, n);
  for (std::int64_t a = 0; a < n; ++a)
    for (std::int64_t c = 0; c < n; ++c) {
      double acc = 0.0;
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < n; ++j)
          acc += s1.vectors.at(i, a) * ob.at(i, j) * s1.vectors.at(j, c);
      b.at(a, c) = acc;
    }
  double de = 0.0;
  for (std::int64_t a = 0; a < n; ++a)
    for (std::int64_t c = 0; c < n; ++c) {
      if (std::abs(std::round(s1.energies[a] * 1e9) -
                   std::round(s1.energies[c] * 1e9)) > 0.5)
        continue;
      de += ov[a] * b.at(a, c) * ov[c];
    }

  CHECK(tde_average(h0, h1, obs, 50.0) == doctest::Approx(de).epsilon(1e-8));
}
