#pragma once

// Stochastic psip sampler for the symmetric Bloch equation
// d rho/d beta = -1/2 (H rho + rho H), starting from rho(0) = 1/2^L.
// Signed walker counts live on folded (m <= n) element keys; the estimator
// is rho_mn = chi_mn / chi_diag with per-element Poisson error formulas.

#include <cstdint>
#include <string>
#include <vector>

#include "rhodyn/exact.hpp"
#include "rhodyn/model.hpp"

namespace rhodyn {

struct PsipPopulation {
  int L = 0;
  Basis basis = Basis::Z;
  // Folded keys (m << 32 | n with m <= n) to net signed counts, sorted by
  // key, zeros evicted. An off-diagonal count speaks for both orientations.
  std::vector<std::pair<std::uint64_t, std::int64_t>> counts;
  double beta_current = 0.0;
  double shift = 0.0;
  std::int64_t total_psips = 0;  // sum of |chi| over ordered pairs
  std::int64_t diag_total = 0;   // chi_diag
  std::uint64_t seed = 0;
  double delta_beta = 0.01;
  std::int64_t loop_index = 0;  // RNG stream component, set by sample()
  std::int64_t step_index = 0;  // steps taken so far

  // Symmetric read of the stored signed count.
  std::int64_t chi_at(std::uint32_t m, std::uint32_t n) const;
};

// Accumulated psip statistics for one element, pooled over loops.
struct PsipStat {
  std::uint32_t m = 0;
  std::uint32_t n = 0;
  std::int64_t chi = 0;  // sum of per-loop signed counts
  std::int64_t N = 0;    // sum of per-loop |count|, the Poisson proxy
};

struct SampleStats {
  int L = 0;
  Basis basis = Basis::Z;
  double beta = 0.0;
  std::int64_t N_psip = 0;
  int N_loops = 0;
  int loops_used = 0;
  double delta_beta = 0.0;
  std::uint64_t seed = 0;
  std::int64_t chi_diag = 0;                 // pooled over used loops
  std::vector<PsipStat> entries;             // sorted by (m, n)
  const PsipStat* find(std::uint32_t m, std::uint32_t n) const;
};

// N_psip walkers spread evenly over the 2^L diagonal elements, remainder
// placed on seeded distinct diagonals, all signs positive. N_psip below 2^L
// is allowed but warns.
PsipPopulation init_population(int L, std::int64_t N_psip, Basis basis,
                               std::uint64_t seed);

// One delta_beta update: left/right spawning with probability
// delta_beta/2 |H_i'i| onto the folded destination, diagonal death or clone
// with p_d = delta_beta/2 (H_ii + H_jj - 2 S), then sort-and-cancel
// annihilation. Deterministic for fixed (seed, loop, step) at any thread
// count. Requires delta_beta * max row sum of |H| < 0.5.
PsipPopulation step(const PsipPopulation& pop, const ModelParams& h0,
                    int threads = 0);

struct SampleResult {
  DensityMatrix rho;  // source DMQMC, symmetric folded storage
  SampleStats stats;
};

// N_loops independent sweeps 0 -> beta_target pooled into the ratio
// estimator rho_mn = sum_l chi_mn^l / sum_l chi_diag^l. The shift stays 0
// until the population exceeds ceiling_factor * N_psip, then follows the
// damped log rule. Loops ending with chi_diag = 0 are discarded with a
// warning; losing every loop is a sampling-failure error.
SampleResult sample(const ModelParams& h0, double beta_target,
                    std::int64_t N_psip, int N_loops, double delta_beta,
                    std::uint64_t seed, int threads = 0,
                    double ceiling_factor = 10.0);

// Per-element statistical errors over a truncation index set W, normalized
// by the in-set diagonal totals chi_diag^w and N_diag^w:
//   off-diagonal: (sqrt(N_mn)/|chi_diag^w|) sqrt(1 + N_mn N_diag^w / (chi_diag^w)^2)
//   diagonal:     (sqrt(N_mm)/|chi_diag^w|) sqrt(1 - 2 chi_mm/chi_diag^w
//                                                + N_mm N_diag^w / (chi_diag^w)^2)
// Pairs with no recorded psips get Delta = 0. chi_diag^w = 0 is an error.
std::vector<ElementError> element_error(const SampleStats& stats,
                                        const std::vector<RhoEntry>& index_set);

// JSON-lines artifact: one header record, then one record per element
// {m, n, chi, N, Delta} with Delta normalized over the full sampled set.
std::string dmqmc_jsonl(const SampleStats& stats);

}  // namespace rhodyn
