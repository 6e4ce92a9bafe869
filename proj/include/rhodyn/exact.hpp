#pragma once

#include <memory>
#include <vector>

#include "rhodyn/linalg.hpp"
#include "rhodyn/model.hpp"
#include "rhodyn/series.hpp"

// Exact-diagonalization oracle: spectra, thermal density matrices, exact
// Heisenberg dynamics of the order parameters, and the thermal diagonal
// ensemble that fixes the late-time value after a quench.

namespace rhodyn {

struct Spectrum {
  ModelParams params;
  std::vector<double> energies;  // ascending
  linalg::DMat vectors;          // orthonormal columns, same order
};

enum class RhoSource { Exact, DMQMC, Truncated };

const char* rho_source_name(RhoSource s);

struct RhoEntry {
  std::uint32_t m = 0;
  std::uint32_t n = 0;  // stored folded, m <= n; value serves (n, m) too
  double val = 0.0;
};

// Statistical uncertainty of one sampled entry, folded like RhoEntry.
struct ElementError {
  std::uint32_t m = 0;
  std::uint32_t n = 0;
  double delta = 0.0;
};

// Sparse symmetric real density matrix. Entries are sorted by (m, n) and
// stored upper-triangular; reads are symmetric.
struct DensityMatrix {
  int L = 0;
  Basis basis = Basis::Z;
  RhoSource source = RhoSource::Exact;
  double trace = 0.0;
  std::vector<RhoEntry> entries;

  std::int64_t dim() const { return std::int64_t(1) << L; }
  double at(std::uint32_t m, std::uint32_t n) const;
  void sort_entries();
  double recompute_trace();  // sum of stored diagonal, also stored in `trace`
  linalg::DMat dense() const;
};

// Full dense eigendecomposition of the Hamiltonian in params.basis.
// Throws CapacityError above the dense guard (default L = 12).
Spectrum diagonalize(const ModelParams& params, int max_dense_L = 12);

// Shared-ownership variant backed by an in-process memo and the optional
// on-disk cache (RHODYN_CACHE_DIR). Results are bitwise identical whether or
// not a cache hit occurs.
std::shared_ptr<const Spectrum> diagonalize_cached(const ModelParams& params,
                                                   int max_dense_L = 12);

// Boltzmann state e^{-beta H} / Z with a store threshold on the magnitude of
// kept entries. beta = 0 takes the exact maximally-mixed shortcut.
DensityMatrix thermal_density_matrix(const ModelParams& params, double beta,
                                     double store_threshold = 1e-16,
                                     int max_dense_L = 12);

// Exact Tr[rho O(t)] with O(t) = e^{iH1 t} O e^{-iH1 t}; the oracle every
// truncated reconstruction is tested against.
TimeSeries heisenberg_expectation(const DensityMatrix& rho,
                                  const Observable& obs,
                                  const ModelParams& quench,
                                  const std::vector<double>& times,
                                  int max_dense_L = 12);

// Thermal diagonal ensemble: (1/Z0) sum over initial eigenstates of the
// Boltzmann-weighted diagonal-ensemble value in the quench eigenbasis.
// Degenerate quench levels are grouped (tolerance 1e-10) and handled via the
// basis-independent block trace.
double tde_average(const ModelParams& h0, const ModelParams& h1,
                   const Observable& obs, double beta, int max_dense_L = 12);

}  // namespace rhodyn
