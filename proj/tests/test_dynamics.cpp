#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "doctest.h"
#include "rhodyn/dynamics.hpp"
#include "rhodyn/exact.hpp"
#include "rhodyn/symmetry.hpp"
#include "rhodyn/truncation.hpp"
#include "rhodyn/util.hpp"

using namespace rhodyn;

namespace {

ModelParams chain(int L, double g, double h, double h_s, Basis basis = Basis::Z) {
  ModelParams p;
  p.L = L;
  p.J = 1.0;
  p.g = g;
  p.h = h;
  p.h_s = h_s;
  p.basis = basis;
  return p;
}

DensityMatrix hand_matrix(int L, std::vector<RhoEntry> entries) {
  DensityMatrix d;
  d.L = L;
  d.basis = Basis::Z;
  d.entries = std::move(entries);
  d.sort_entries();
  d.recompute_trace();
  return d;
}

std::vector<cd> unit_vec(std::uint32_t bits, int L) {
  std::vector<cd> v(std::size_t(1) << L, cd(0.0));
  v[bits] = 1.0;
  return v;
}

// Dense Heisenberg-picture observable exp(iHt) O exp(-iHt) from a spectrum.
// Entry (i, j) of the result is <i|O(t)|j>.
std::vector<std::complex<double>> evolved_dense(const Spectrum& spec,
                                                const SparseOp& op, double t) {
  const std::int64_t n = spec.vectors.rows;
  const linalg::DMat& V = spec.vectors;
  const linalg::DMat O = op.dense();
  linalg::DMat W(n, n);
  for (std::int64_t j = 0; j < n; ++j)
    for (std::int64_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::int64_t k = 0; k < n; ++k) s += O.at(i, k) * V.at(k, j);
      W.at(i, j) = s;
    }
  linalg::DMat B(n, n);
  for (std::int64_t j = 0; j < n; ++j)
    for (std::int64_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::int64_t k = 0; k < n; ++k) s += V.at(k, i) * W.at(k, j);
      B.at(i, j) = s;
    }
  std::vector<std::complex<double>> ph(n);
  for (std::int64_t k = 0; k < n; ++k)
    ph[k] = std::polar(1.0, spec.energies[k] * t);
  std::vector<std::complex<double>> M(std::size_t(n) * n);
  std::vector<std::complex<double>> out(std::size_t(n) * n);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t k = 0; k < n; ++k) {
      std::complex<double> s = 0.0;
      for (std::int64_t j = 0; j < n; ++j) s += V.at(i, j) * ph[j] * B.at(j, k);
      M[std::size_t(i) * n + k] = s;
    }
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t m = 0; m < n; ++m) {
      std::complex<double> s = 0.0;
      for (std::int64_t k = 0; k < n; ++k)
        s += M[std::size_t(i) * n + k] * std::conj(ph[k]) * V.at(m, k);
      out[std::size_t(i) * n + m] = s;
    }
  return out;
}

double state_dist(const cd* a, const cd* b, std::size_t n) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST_CASE("default grid and CSV format") {
  const auto t = default_time_grid();
  REQUIRE(t.size() == 201);
  CHECK(t.front() == 0.0);
  CHECK(t.back() == 10.0);
  for (std::size_t k = 1; k < t.size(); ++k)
    CHECK(std::abs(t[k] - t[k - 1] - 0.05) < 1e-14);

  CHECK(std::string(propagation_method_name(PropagationMethod::EigenDecomposition)) ==
        "eigendecomposition");
  CHECK(std::string(propagation_method_name(PropagationMethod::Krylov)) == "krylov");

  TimeSeries ts;
  ts.times = {0.0, 0.5};
  ts.values = {1.0, -0.25};
  CHECK(time_series_csv(ts) == "t,value,stat_err\n0,1,\n0.5,-0.25,\n");
  ts.stat_err = {0.125, 0.0625};
  CHECK(time_series_csv(ts) == "t,value,stat_err\n0,1,0.125\n0.5,-0.25,0.0625\n");
  ts.stat_err = {0.125};
  CHECK_THROWS_AS((void)time_series_csv(ts), std::invalid_argument);
}

TEST_CASE("trivial evolution limits") {
  const ModelParams h1 = chain(6, 1.0, 1.0, 0.0);
  const auto psi0 = unit_vec(42, 6);  // |010101>

  for (auto method : {PropagationMethod::EigenDecomposition, PropagationMethod::Krylov}) {
    const Trajectory tr = evolve_state(h1, psi0, {0.0, 1.3}, method);
    CHECK(tr.method == method);
    CHECK(tr.dim == 64);
    CHECK(state_dist(tr.col(0), psi0.data(), psi0.size()) < 1e-12);
  }

  // An eigenvector only picks up a phase: |<psi0|psi(t)>| stays 1.
  const Spectrum spec = diagonalize(h1);
  std::vector<cd> ground(64);
  for (int i = 0; i < 64; ++i) ground[i] = spec.vectors.at(i, 0);
  const std::vector<double> times = {0.0, 0.7, 2.9, 6.1};
  for (auto method : {PropagationMethod::EigenDecomposition, PropagationMethod::Krylov}) {
    const Trajectory tr = evolve_state(h1, ground, times, method);
    for (std::size_t k = 0; k < times.size(); ++k) {
      cd ov = 0.0;
      for (int i = 0; i < 64; ++i) ov += std::conj(ground[i]) * tr.col(k)[i];
      CHECK(std::abs(std::abs(ov) - 1.0) < 1e-10);
      // And the phase is exp(-i E0 t).
      const cd expect = std::polar(1.0, -spec.energies[0] * times[k]);
      CHECK(std::abs(ov - expect) < 1e-8);
    }
  }

  std::vector<cd> shrunk = psi0;
  shrunk[42] = 0.5;
  CHECK_THROWS_AS((void)evolve_state(h1, shrunk, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS((void)evolve_state(h1, unit_vec(0, 4), {0.0}), std::invalid_argument);
  CHECK_THROWS_AS((void)evolve_state(h1, psi0, {}), std::invalid_argument);
}

TEST_CASE("eigendecomposition and Lanczos stepping agree") {
  const ModelParams h1 = chain(8, 1.0, 1.0, 0.0);
  const auto psi0 = unit_vec(0xAA, 8);  // |01010101>
  std::vector<double> times;
  for (int k = 0; k <= 20; ++k) times.push_back(0.5 * k);

  const Trajectory ed = evolve_state(h1, psi0, times, PropagationMethod::EigenDecomposition);
  const Trajectory kr = evolve_state(h1, psi0, times, PropagationMethod::Krylov);
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k)
    worst = std::max(worst, state_dist(ed.col(k), kr.col(k), 256));
  CHECK(worst < 1e-8);

  // Forward then backward along the grid lands on the initial state.
  for (auto method : {PropagationMethod::EigenDecomposition, PropagationMethod::Krylov}) {
    const Trajectory loop = evolve_state(h1, psi0, {3.7, 0.0}, method);
    CHECK(state_dist(loop.col(1), psi0.data(), psi0.size()) < 1e-9);
  }
}

TEST_CASE("matrix elements match the dense Heisenberg picture") {
  const ModelParams h1 = chain(6, 1.0, 1.0, 0.0);
  const Spectrum spec = diagonalize(h1);
  const std::vector<double> times = {0.0, 0.63, 2.17};
  const std::uint32_t dim = 64;

  std::mt19937_64 rng(777);
  std::uniform_int_distribution<std::uint32_t> pick(0, dim - 1);
  for (ObsKind kind : {ObsKind::StaggeredMagnetizationZ, ObsKind::MagnetizationX}) {
    const Observable obs{kind, 6};
    const SparseOp op = observable_op(obs, h1.basis);
    std::vector<std::vector<cd>> dense;
    for (double t : times) dense.push_back(evolved_dense(spec, op, t));
    for (int trial = 0; trial < 8; ++trial) {
      const std::uint32_t n = pick(rng), m = pick(rng);
      const auto series = matrix_element_series({n, 6, Basis::Z}, {m, 6, Basis::Z},
                                                obs, h1, times);
      CHECK(series.n == n);
      CHECK(series.m == m);
      CHECK(series.method == PropagationMethod::EigenDecomposition);
      for (std::size_t k = 0; k < times.size(); ++k)
        CHECK(std::abs(series.values[k] - dense[k][std::size_t(n) * dim + m]) < 1e-10);

      // Hermitian pairing: swapping the states conjugates the series.
      const auto swapped = matrix_element_series({m, 6, Basis::Z}, {n, 6, Basis::Z},
                                                 obs, h1, times);
      for (std::size_t k = 0; k < times.size(); ++k)
        CHECK(std::abs(swapped.values[k] - std::conj(series.values[k])) < 1e-12);
    }
  }

  // The Lanczos path reproduces the same elements.
  const Observable stag{ObsKind::StaggeredMagnetizationZ, 6};
  const std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs = {
      {42, 42}, {21, 42}, {7, 56}};
  for (auto [n, m] : pairs) {
    const auto ed = matrix_element_series({n, 6, Basis::Z}, {m, 6, Basis::Z}, stag, h1,
                                          times, PropagationMethod::EigenDecomposition);
    const auto kr = matrix_element_series({n, 6, Basis::Z}, {m, 6, Basis::Z}, stag, h1,
                                          times, PropagationMethod::Krylov);
    CHECK(kr.method == PropagationMethod::Krylov);
    for (std::size_t k = 0; k < times.size(); ++k)
      CHECK(std::abs(ed.values[k] - kr.values[k]) < 1e-8);
  }

  // Staggered magnetization of the Neel ket at t = 0.
  const BasisState neel = BasisState::from_ket("010101");
  const auto diag = matrix_element_series(neel, neel, stag, h1, {0.0, 1.0});
  CHECK(std::abs(diag.values[0] - cd(-1.0)) < 1e-12);

  // A quench that commutes with the observable leaves every element static.
  const ModelParams frozen = chain(4, 0.0, 0.0, 0.0);
  const Observable stag4{ObsKind::StaggeredMagnetizationZ, 4};
  const std::vector<double> grid = {0.0, 0.9, 3.4, 7.7};
  const auto d = matrix_element_series({10, 4, Basis::Z}, {10, 4, Basis::Z}, stag4,
                                       frozen, grid);
  const auto o = matrix_element_series({5, 4, Basis::Z}, {10, 4, Basis::Z}, stag4,
                                       frozen, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(std::abs(d.values[k] - d.values[0]) < 1e-12);
    CHECK(std::abs(o.values[k]) < 1e-12);
  }
}

TEST_CASE("superposition probe recovers the real part of an element") {
  // Re <n|O(t)|m> = ( <+|O(t)|+> - <-|O(t)|-> ) / 2 with |+-> = (|n> +- |m>)/sqrt(2).
  const ModelParams h1 = chain(4, 1.0, 1.0, 0.0);
  const Observable obs{ObsKind::StaggeredMagnetizationZ, 4};
  const SparseOp op = observable_op(obs, h1.basis);
  const std::vector<double> times = {0.0, 0.8, 2.3, 5.9};
  const std::uint32_t n = 5, m = 10;

  std::vector<cd> plus(16, cd(0.0)), minus(16, cd(0.0));
  const double r = 1.0 / std::sqrt(2.0);
  plus[n] = r;
  plus[m] = r;
  minus[n] = r;
  minus[m] = -r;
  const Trajectory tp = evolve_state(h1, plus, times);
  const Trajectory tm = evolve_state(h1, minus, times);
  const auto series = matrix_element_series({n, 4, Basis::Z}, {m, 4, Basis::Z},
                                            obs, h1, times);
  std::vector<cd> tmp(16);
  for (std::size_t k = 0; k < times.size(); ++k) {
    double probe = 0.0;
    for (const auto* traj : {&tp, &tm}) {
      std::fill(tmp.begin(), tmp.end(), cd(0.0));
      op.apply_add(traj->col(k), tmp.data());
      cd e = 0.0;
      for (int i = 0; i < 16; ++i) e += std::conj(traj->col(k)[i]) * tmp[i];
      probe += (traj == &tp ? 0.5 : -0.5) * e.real();
    }
    CHECK(std::abs(probe - series.values[k].real()) < 1e-12);
  }
}

TEST_CASE("full-weight reconstruction equals the direct thermal series") {
  std::vector<double> times;
  for (int k = 0; k <= 10; ++k) times.push_back(k);

  for (int L : {4, 6}) {
    const ModelParams h0 = chain(L, 0.5, 0.0, 1.0 / L);
    const ModelParams h1 = chain(L, 1.0, 1.0, 0.0);
    const Observable obs{ObsKind::StaggeredMagnetizationZ, L};
    const DensityMatrix rho = thermal_density_matrix(h0, 1.5);
    const auto trunc = truncate(rho, TruncTarget::cutoff(0.0));
    const auto plan = plan_simulations(trunc.index_set, obs, h1);
    const TimeSeries recon = reconstruct(trunc, plan, obs, h1, times);
    const TimeSeries oracle = heisenberg_expectation(rho, obs, h1, times);
    for (std::size_t k = 0; k < times.size(); ++k)
      CHECK(std::abs(recon.values[k] - oracle.values[k]) < 1e-10);

    CHECK(recon.meta.source == "truncated");
    CHECK(recon.meta.method == "eigendecomposition");
    CHECK(recon.meta.w == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(recon.meta.N_w == trunc.N_w);
    CHECK(recon.meta.N_sim == plan.N_sim);
    CHECK(plan.N_sim > 0);
    CHECK(recon.stat_err.empty());

    // Same data through the relative-distance metric: the gap vanishes.
    CHECK(truncation_error(oracle, recon) < 1e-9);
  }

  // The x-basis route works the same way.
  const ModelParams h0x = chain(4, 1.5, 0.0, 0.25, Basis::X);
  const ModelParams h1x = chain(4, 1.0, 1.0, 0.0, Basis::X);
  const Observable mx{ObsKind::MagnetizationX, 4};
  const DensityMatrix rhox = thermal_density_matrix(h0x, 1.5);
  const auto truncx = truncate(rhox, TruncTarget::cutoff(0.0));
  const auto planx = plan_simulations(truncx.index_set, mx, h1x);
  const TimeSeries reconx = reconstruct(truncx, planx, mx, h1x, times);
  const TimeSeries oraclex = heisenberg_expectation(rhox, mx, h1x, times);
  for (std::size_t k = 0; k < times.size(); ++k)
    CHECK(std::abs(reconx.values[k] - oraclex.values[k]) < 1e-10);
}

TEST_CASE("a single diagonal element reproduces pure-state dynamics") {
  const ModelParams h1 = chain(4, 1.0, 1.0, 0.0);
  const Observable obs{ObsKind::StaggeredMagnetizationZ, 4};
  const std::vector<double> times = {0.0, 0.8, 1.9, 4.2, 8.8};

  const DensityMatrix pure = hand_matrix(4, {{10, 10, 1.0}});
  const auto trunc = truncate(pure, TruncTarget::cutoff(0.0));
  const auto plan = plan_simulations(trunc.index_set, obs, h1);
  REQUIRE(plan.N_sim == 1);
  const TimeSeries recon = reconstruct(trunc, plan, obs, h1, times);

  const auto series = matrix_element_series({10, 4, Basis::Z}, {10, 4, Basis::Z},
                                            obs, h1, times);
  for (std::size_t k = 0; k < times.size(); ++k)
    CHECK(std::abs(recon.values[k] - series.values[k].real()) < 1e-12);
  CHECK(std::abs(recon.values[0] - (-1.0)) < 1e-12);
}

TEST_CASE("statistical band quadrature") {
  const ModelParams h1 = chain(4, 1.0, 1.0, 0.0);
  const std::vector<double> times = {0.0, 1.1, 3.3};

  // Two Neel diagonals fold onto one representative with opposite signs.
  const Observable stag{ObsKind::StaggeredMagnetizationZ, 4};
  const DensityMatrix rho = hand_matrix(4, {{5, 5, 0.6}, {10, 10, 0.4}});
  const auto trunc = truncate(rho, TruncTarget::cutoff(0.0));
  const auto plan = plan_simulations(trunc.index_set, stag, h1);
  REQUIRE(plan.N_sim == 1);
  REQUIRE(plan.representatives[0] == std::pair<std::uint32_t, std::uint32_t>{5, 5});
  std::vector<MatrixElementSeries> reps;
  reps.push_back(matrix_element_series({5, 4, Basis::Z}, {5, 4, Basis::Z}, stag, h1, times));

  SUBCASE("zero errors give a zero band") {
    const auto band = statistical_band(plan, reps, {{5, 5, 0.0}, {10, 10, 0.0}}, times);
    for (double b : band) CHECK(b == 0.0);
  }
  SUBCASE("two diagonal pairs add in quadrature on the shared series") {
    const auto band = statistical_band(plan, reps, {{5, 5, 0.03}, {10, 10, 0.04}}, times);
    for (std::size_t k = 0; k < times.size(); ++k)
      CHECK(band[k] == doctest::Approx(0.05 * std::abs(reps[0].values[k])).epsilon(1e-12));
  }
  SUBCASE("every retained pair needs an error entry") {
    CHECK_THROWS_AS((void)statistical_band(plan, reps, {{5, 5, 0.03}}, times),
                    std::invalid_argument);
  }
  SUBCASE("malformed error lists are rejected") {
    CHECK_THROWS_AS(
        (void)statistical_band(plan, reps, {{5, 5, 0.1}, {5, 5, 0.1}, {10, 10, 0.1}}, times),
        std::invalid_argument);
    CHECK_THROWS_AS((void)statistical_band(plan, reps, {{5, 5, -0.1}, {10, 10, 0.1}}, times),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)statistical_band(plan, reps, {{10, 5, 0.1}, {5, 5, 0.1}}, times),
                    std::invalid_argument);
  }

  // An off-diagonal pair counts twice under the quadrature. The diagonal
  // anchor keeps the trace normalizable and carries a zero error.
  const Observable mx{ObsKind::MagnetizationX, 4};
  const DensityMatrix rho2 = hand_matrix(4, {{0, 0, 1.0}, {1, 2, 0.5}});
  const auto trunc2 = truncate(rho2, TruncTarget::cutoff(0.0));
  const auto plan2 = plan_simulations(trunc2.index_set, mx, h1);
  REQUIRE(plan2.N_sim == 2);
  std::vector<MatrixElementSeries> reps2;
  for (const auto& [rm, rn] : plan2.representatives)
    reps2.push_back(matrix_element_series({rn, 4, Basis::Z}, {rm, 4, Basis::Z},
                                          mx, h1, times));
  const auto band2 = statistical_band(plan2, reps2, {{0, 0, 0.0}, {1, 2, 0.25}}, times);
  std::size_t off_idx = plan2.representatives[0] ==
                        std::pair<std::uint32_t, std::uint32_t>{1, 2} ? 0 : 1;
  for (std::size_t k = 0; k < times.size(); ++k)
    CHECK(band2[k] == doctest::Approx(0.25 * std::sqrt(2.0) *
                                      std::abs(reps2[off_idx].values[k])).epsilon(1e-12));

  // Excluded pairs carry a zero coefficient, so their errors never enter.
  const DensityMatrix rho3 = hand_matrix(4, {{5, 5, 0.7}, {5, 10, 0.3}});
  const auto trunc3 = truncate(rho3, TruncTarget::cutoff(0.0));
  const auto plan3 = plan_simulations(trunc3.index_set, stag, h1);
  REQUIRE(plan3.excluded.size() == 1);
  std::vector<MatrixElementSeries> reps3;
  for (const auto& [rm, rn] : plan3.representatives)
    reps3.push_back(matrix_element_series({rn, 4, Basis::Z}, {rm, 4, Basis::Z},
                                          stag, h1, times));
  const auto lean = statistical_band(plan3, reps3, {{5, 5, 0.02}}, times);
  const auto loaded = statistical_band(plan3, reps3, {{5, 5, 0.02}, {5, 10, 99.0}}, times);
  for (std::size_t k = 0; k < times.size(); ++k) CHECK(lean[k] == loaded[k]);

  // reconstruct attaches the same band when errors are supplied.
  const TimeSeries with_band =
      reconstruct(trunc, plan, stag, h1, times, {{5, 5, 0.03}, {10, 10, 0.04}});
  REQUIRE(with_band.stat_err.size() == times.size());
  for (std::size_t k = 0; k < times.size(); ++k)
    CHECK(with_band.stat_err[k] ==
          doctest::Approx(0.05 * std::abs(reps[0].values[k])).epsilon(1e-12));
}

TEST_CASE("relative truncation distance") {
  TimeSeries a, b;
  a.times = b.times = {0.0, 1.0, 3.0};
  a.values = {2.0, 1.0, -1.0};
  b.values = a.values;
  CHECK(truncation_error(a, b) == 0.0);

  b.values = {0.0, 0.0, 0.0};
  CHECK(truncation_error(a, b) == 1.0);

  // Hand-checked trapezoid weights 0.5, 1.5, 1.0 on the nonuniform grid.
  b.values = {1.5, 1.3, -0.2};
  const double num = 0.5 * 0.25 + 1.5 * 0.09 + 1.0 * 0.64;
  const double den = 0.5 * 4.0 + 1.5 * 1.0 + 1.0 * 1.0;
  CHECK(truncation_error(a, b) == doctest::Approx(std::sqrt(num / den)).epsilon(1e-14));

  TimeSeries zero = a;
  zero.values = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS((void)truncation_error(zero, a), NumericalError);

  TimeSeries off = b;
  off.times = {0.0, 1.0, 3.5};
  CHECK_THROWS_AS((void)truncation_error(a, off), std::invalid_argument);
  TimeSeries stub;
  stub.times = {0.0};
  stub.values = {1.0};
  CHECK_THROWS_AS((void)truncation_error(stub, stub), std::invalid_argument);
  TimeSeries fold = a;
  fold.times = {0.0, 3.0, 1.0};
  CHECK_THROWS_AS((void)truncation_error(fold, fold), std::invalid_argument);
}

TEST_CASE("input contracts of the reconstruction entry points") {
  const ModelParams big = chain(14, 1.0, 1.0, 0.0);
  CHECK_THROWS_AS((void)evolve_state(big, unit_vec(0, 14), {0.0, 1.0},
                                     PropagationMethod::EigenDecomposition),
                  CapacityError);

  const ModelParams h1 = chain(4, 1.0, 1.0, 0.0);
  const Observable stag{ObsKind::StaggeredMagnetizationZ, 4};
  const std::vector<double> times = {0.0, 1.0};

  CHECK_THROWS_AS((void)matrix_element_series({16, 4, Basis::Z}, {0, 4, Basis::Z},
                                              stag, h1, times),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)matrix_element_series({0, 4, Basis::X}, {0, 4, Basis::Z},
                                              stag, h1, times),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)matrix_element_series({0, 6, Basis::Z}, {0, 6, Basis::Z},
                                              {ObsKind::StaggeredMagnetizationZ, 6},
                                              h1, times),
                  std::invalid_argument);

  const DensityMatrix rho = hand_matrix(4, {{5, 5, 0.6}, {10, 10, 0.4}});
  const auto trunc = truncate(rho, TruncTarget::cutoff(0.0));
  const auto plan = plan_simulations(trunc.index_set, stag, h1);

  // Plan built from a narrower index set than the matrix carries.
  const auto narrow = plan_simulations({{5, 5, 0.6}}, stag, h1);
  CHECK_THROWS_AS((void)reconstruct(trunc, narrow, stag, h1, times), std::invalid_argument);

  const ModelParams h1x = chain(4, 1.0, 1.0, 0.0, Basis::X);
  CHECK_THROWS_AS((void)reconstruct(trunc, plan, stag, h1x, times), std::invalid_argument);

  const Observable mx{ObsKind::MagnetizationX, 4};
  CHECK_THROWS_AS((void)reconstruct(trunc, plan, mx, h1, times), std::invalid_argument);

  CHECK_THROWS_AS((void)reconstruct(trunc, plan, stag, h1, {}), std::invalid_argument);
}

TEST_CASE("reconstruction is deterministic across worker counts") {
  const ModelParams h0 = chain(6, 1.5, 0.0, 1.0 / 6);
  const ModelParams h1 = chain(6, 1.0, 1.0, 0.0);
  const Observable obs{ObsKind::StaggeredMagnetizationZ, 6};
  const std::vector<double> times = {0.0, 0.5, 1.5, 4.0, 9.5};

  const DensityMatrix rho = thermal_density_matrix(h0, 1.0);
  const auto trunc = truncate(rho, TruncTarget::weight(0.9));
  const auto plan = plan_simulations(trunc.index_set, obs, h1);
  REQUIRE(plan.N_sim > 1);

  const TimeSeries one = reconstruct(trunc, plan, obs, h1, times, {}, 1);
  const TimeSeries two = reconstruct(trunc, plan, obs, h1, times, {}, 2);
  REQUIRE(one.values.size() == two.values.size());
  for (std::size_t k = 0; k < times.size(); ++k) CHECK(one.values[k] == two.values[k]);
}
