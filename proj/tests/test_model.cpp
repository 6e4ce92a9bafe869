#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "rhodyn/model.hpp"

using namespace rhodyn;

namespace {

std::vector<cd> random_state(int L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<cd> v(std::size_t(1) << L);
  for (auto& x : v) x = cd(u(rng), u(rng));
  return v;
}

cd inner(const std::vector<cd>& a, const std::vector<cd>& b) {
  cd s(0, 0);
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace

TEST_CASE("parameter validation") {
  ModelParams p;
  p.L = 4;
  p.J = 1.0;
  CHECK_NOTHROW(p.validate());
  p.L = 1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.L = 5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.L = 22;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.L = 4;
  p.J = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.J = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("ket string encoding: site 1 is the least significant bit") {
  BasisState neel = BasisState::from_ket("0101");
  CHECK(neel.bits == 10);
  CHECK(neel.L == 4);
  CHECK(neel.ket() == "0101");
  BasisState anti = BasisState::from_ket("1010");
  CHECK(anti.bits == 5);
  CHECK(BasisState::from_ket("0001").bits == 8);
}

TEST_CASE("two-site chain with staggered field: known diagonal") {
  ModelParams p;
  p.L = 2;
  p.J = 1.0;
  p.g = 0.0;
  p.h = 0.0;
  p.h_s = 0.5;
  // Ket order |00>, |01>, |10>, |11>.
  double want_ket[4] = {2.0, -3.0, -1.0, 2.0};
  const char* kets[4] = {"00", "01", "10", "11"};
  for (int k = 0; k < 4; ++k) {
    BasisState s = BasisState::from_ket(kets[k]);
    CHECK(hamiltonian_diagonal_entry(p, s.bits) ==
          doctest::Approx(want_ket[k]));
  }
  // Same numbers in index order 0..3.
  double want_idx[4] = {2.0, -1.0, -3.0, 2.0};
  for (std::uint32_t b = 0; b < 4; ++b)
    CHECK(hamiltonian_diagonal_entry(p, b) == doctest::Approx(want_idx[b]));
  // No transverse field: purely diagonal operator.
  CHECK(hamiltonian_op(p).flips.empty());
}

TEST_CASE("classical Ising energy of the alternating state") {
  ModelParams p;
  p.L = 4;
  p.J = 1.0;
  std::vector<cd> v(16, cd(0, 0));
  v[BasisState::from_ket("0101").bits] = cd(1, 0);
  auto hv = apply_hamiltonian(p, v);
  for (std::size_t i = 0; i < 16; ++i)
    CHECK(std::abs(hv[i] - (-4.0) * v[i]) < 1e-14);
}

TEST_CASE("transverse term alone connects all single-flip states") {
  ModelParams p;
  p.L = 4;
  p.J = 0.0;  // isolate the transverse term
  p.g = 1.0;
  std::vector<cd> v(16, cd(0, 0));
  v[0] = cd(1, 0);
  auto hv = apply_hamiltonian(p, v);
  for (std::size_t i = 0; i < 16; ++i) {
    bool one_flip = std::popcount(i) == 1;
    CHECK(std::abs(hv[i] - (one_flip ? cd(1, 0) : cd(0, 0))) < 1e-14);
  }
}

TEST_CASE("hermiticity over random vectors, both bases") {
  for (Basis basis : {Basis::Z, Basis::X}) {
    ModelParams p;
    p.L = 6;
    p.J = 1.0;
    p.g = 0.7;
    p.h = 0.3;
    p.h_s = 1.0 / 6.0;
    p.basis = basis;
    for (int trial = 0; trial < 10; ++trial) {
      auto u = random_state(6, 100 * trial + 1);
      auto v = random_state(6, 100 * trial + 2);
      cd lhs = inner(u, apply_hamiltonian(p, v));
      cd rhs = inner(apply_hamiltonian(p, u), v);
      CHECK(std::abs(lhs - rhs) < 1e-12);
    }
  }
}

TEST_CASE("dimension mismatch rejected") {
  ModelParams p;
  p.L = 4;
  std::vector<cd> v(8);
  CHECK_THROWS_AS(apply_hamiltonian(p, v), std::invalid_argument);
}

TEST_CASE("basis rotation") {
  std::vector<cd> one_site = {cd(1, 0), cd(0, 0)};
  auto r = rotate_basis(one_site, 1);
  CHECK(std::abs(r[0] - 1.0 / std::sqrt(2.0)) < 1e-14);
  CHECK(std::abs(r[1] - 1.0 / std::sqrt(2.0)) < 1e-14);

  std::vector<cd> two(4, cd(0, 0));
  two[0] = cd(1, 0);
  auto r2 = rotate_basis(two, 2);
  for (auto& x : r2) CHECK(std::abs(x - cd(0.5, 0)) < 1e-14);

  auto v = random_state(6, 42);
  auto back = rotate_basis(rotate_basis(v, 6), 6);
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(std::abs(back[i] - v[i]) < 1e-12);
}

TEST_CASE("z-basis operator conjugated by the rotation equals the x-basis build") {
  struct Case {
    double g, h, h_s;
  } cases[] = {{1.3, 0.0, 0.0}, {0.8, 0.6, 1.0 / 6.0}};
  for (const auto& c : cases) {
    ModelParams pz;
    pz.L = 6;
    pz.J = 1.0;
    pz.g = c.g;
    pz.h = c.h;
    pz.h_s = c.h_s;
    pz.basis = Basis::Z;
    ModelParams px = pz;
    px.basis = Basis::X;
    auto v = random_state(6, 7);
    auto lhs = rotate_basis(apply_hamiltonian(pz, rotate_basis(v, 6)), 6);
    auto rhs = apply_hamiltonian(px, v);
    for (std::size_t i = 0; i < v.size(); ++i)
      CHECK(std::abs(lhs[i] - rhs[i]) < 1e-12);
  }
}

TEST_CASE("x-basis bond moves merge at L=2") {
  ModelParams p;
  p.L = 2;
  p.J = 1.0;
  p.basis = Basis::X;
  auto op = hamiltonian_op(p);
  REQUIRE(op.flips.size() == 1);
  CHECK(op.flips[0].mask == 3);
  CHECK(op.flips[0].amp == doctest::Approx(2.0));
}

TEST_CASE("observable values on labeled states") {
  Observable mz{ObsKind::StaggeredMagnetizationZ, 4};
  CHECK(observable_value(mz, BasisState::from_ket("0101")) ==
        doctest::Approx(-1.0));
  CHECK(observable_value(mz, BasisState::from_ket("1010")) ==
        doctest::Approx(1.0));
  Observable mx{ObsKind::MagnetizationX, 4};
  BasisState xall = BasisState::from_ket("0000", Basis::X);
  CHECK(observable_value(mx, xall) == doctest::Approx(1.0));

  BasisState zstate = BasisState::from_ket("0000", Basis::Z);
  CHECK_THROWS_AS(observable_value(mx, zstate), std::invalid_argument);
  CHECK_THROWS_AS(observable_value(mz, xall), std::invalid_argument);
}

TEST_CASE("observable range and tracelessness") {
  for (int L : {4, 6}) {
    for (ObsKind kind :
         {ObsKind::StaggeredMagnetizationZ, ObsKind::MagnetizationX}) {
      Observable obs{kind, L};
      Basis diag_basis =
          kind == ObsKind::StaggeredMagnetizationZ ? Basis::Z : Basis::X;
      double trace = 0.0;
      for (std::uint32_t b = 0; b < (1u << L); ++b) {
        double val = observable_diagonal_entry(obs, diag_basis, b);
        CHECK(std::abs(val) <= 1.0 + 1e-15);
        trace += val;
      }
      CHECK(std::abs(trace) < 1e-12);
      // The off-diagonal representation in the other basis is traceless by
      // construction (pure flip moves); verify via the dense form at L=4.
      if (L == 4) {
        Basis other = diag_basis == Basis::Z ? Basis::X : Basis::Z;
        auto dense = observable_op(obs, other).dense();
        double tr = 0.0;
        for (std::int64_t i = 0; i < dense.rows; ++i) tr += dense.at(i, i);
        CHECK(std::abs(tr) < 1e-14);
      }
    }
  }
}

TEST_CASE("observable matrix agrees between bases under rotation") {
  // M applied in the z basis, conjugated by the rotation, equals M applied
  // in the x basis, for both observables.
  int L = 4;
  for (ObsKind kind :
       {ObsKind::StaggeredMagnetizationZ, ObsKind::MagnetizationX}) {
    Observable obs{kind, L};
    auto opz = observable_op(obs, Basis::Z);
    auto opx = observable_op(obs, Basis::X);
    auto v = random_state(L, 9);
    std::vector<cd> yx(v.size(), cd(0, 0));
    opx.apply_add(v.data(), yx.data());
    auto w = rotate_basis(v, L);
    std::vector<cd> yz(v.size(), cd(0, 0));
    opz.apply_add(w.data(), yz.data());
    auto lhs = rotate_basis(yz, L);
    for (std::size_t i = 0; i < v.size(); ++i)
      CHECK(std::abs(lhs[i] - yx[i]) < 1e-12);
  }
}

TEST_CASE("dense materialization is symmetric and matches apply") {
  ModelParams p;
  p.L = 4;
  p.J = 1.0;
  p.g = 0.9;
  p.h = 0.4;
  p.h_s = 0.25;
  auto op = hamiltonian_op(p);
  auto m = op.dense();
  for (std::int64_t i = 0; i < m.rows; ++i)
    for (std::int64_t j = 0; j < i; ++j)
      CHECK(m.at(i, j) == doctest::Approx(m.at(j, i)));
  auto v = random_state(4, 77);
  std::vector<cd> y(v.size(), cd(0, 0));
  op.apply_add(v.data(), y.data());
  for (std::int64_t i = 0; i < m.rows; ++i) {
    cd want(0, 0);
    for (std::int64_t j = 0; j < m.cols; ++j) want += m.at(i, j) * v[j];
    CHECK(std::abs(want - y[i]) < 1e-12);
  }
}

TEST_CASE("default basis and observable pairing") {
  CHECK(default_basis_for(0.5) == Basis::Z);
  CHECK(default_basis_for(1.0) == Basis::Z);
  CHECK(default_basis_for(1.5) == Basis::X);
  CHECK(default_observable_for(Basis::Z) == ObsKind::StaggeredMagnetizationZ);
  CHECK(default_observable_for(Basis::X) == ObsKind::MagnetizationX);
}
