#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rhodyn/exact.hpp"
#include "rhodyn/model.hpp"

// Magnitude truncation of a density matrix: keep the largest elements until a
// Frobenius-weight, element-count, or cutoff target is met, then renormalize
// the trace. Element counts are over ordered pairs, so a stored off-diagonal
// entry contributes two and the count saturates at 2^(2L).

namespace rhodyn {

enum class TruncKind { Weight, Count, Cutoff };

struct TruncTarget {
  TruncKind kind = TruncKind::Cutoff;
  double value = 0.0;      // weight target or cutoff magnitude
  std::int64_t count = 0;  // ordered-pair budget for Count

  static TruncTarget weight(double w_star) { return {TruncKind::Weight, w_star, 0}; }
  static TruncTarget count_limit(std::int64_t n_star) { return {TruncKind::Count, 0.0, n_star}; }
  static TruncTarget cutoff(double eps) { return {TruncKind::Cutoff, eps, 0}; }
};

struct TruncatedDensityMatrix {
  DensityMatrix rho_w;              // source Truncated, renormalized to unit trace
  std::vector<RhoEntry> index_set;  // retained entries, |value| descending, renormalized
  double cutoff = 0.0;
  double weight = 1.0;  // Frobenius ratio of the selection, pre-renormalization
  std::int64_t N_w = 0; // ordered-pair count of the selection
};

// Sort by |value| descending (ties by ascending (m, n)), keep the shortest
// prefix reaching a weight target, the longest prefix within an ordered-pair
// budget, or everything above a cutoff. Weight targets outside (0, 1] are
// rejected; a retained set whose trace is below 1e-12 cannot be renormalized
// and raises NumericalError.
TruncatedDensityMatrix truncate(const DensityMatrix& rho, const TruncTarget& target);

// sqrt of the ratio of full-matrix Frobenius masses; off-diagonal entries
// count twice. The subset's support must be contained in the reference's.
double weight_of(const DensityMatrix& rho_subset, const DensityMatrix& rho);

struct SweepPoint {
  int L = 4;
  double beta = 1.0;
  double g0 = 1.0;
  double h0 = 0.0;
  Basis basis = Basis::Z;
};

struct SweepRow {
  SweepPoint point;
  double w_target = 0.0;
  std::int64_t N_w = 0;
  double achieved_w = 0.0;
  bool failed = false;
  std::string error;
};

// For each grid point, build the exact thermal state of the corresponding
// pre-quench Hamiltonian (h_s = 1/L) in the requested basis and record the
// element count of the shortest prefix reaching w_target. Capacity errors
// mark the row failed and the sweep continues.
std::vector<SweepRow> sweep_Nw(const std::vector<SweepPoint>& grid, double w_target,
                               int max_dense_L = 12, int threads = 0);

// CSV with header L,beta,g0,h0,basis,w_target,N_w,achieved_w. Failed rows
// leave the last two fields empty.
std::string sweep_csv(const std::vector<SweepRow>& rows);

// JSON object {retained: [{m, n, value}...], epsilon, w, N_w}.
std::string truncation_manifest_json(const TruncatedDensityMatrix& t);

}  // namespace rhodyn
