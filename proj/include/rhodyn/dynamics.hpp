#pragma once

// Real-time dynamics after the quench: state propagation by exact
// eigendecomposition or Lanczos stepping, Heisenberg-picture matrix elements,
// and the reconstruction of <O(t)> from a truncated density matrix expanded
// over symmetry orbits, with statistical and truncation error channels.

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rhodyn/exact.hpp"
#include "rhodyn/model.hpp"
#include "rhodyn/series.hpp"
#include "rhodyn/symmetry.hpp"
#include "rhodyn/truncation.hpp"

namespace rhodyn {

enum class PropagationMethod { EigenDecomposition, Krylov };
const char* propagation_method_name(PropagationMethod m);

struct Trajectory {
  std::int64_t dim = 0;
  std::vector<double> times;
  std::vector<cd> states;  // column-major, dim x times.size()
  PropagationMethod method = PropagationMethod::EigenDecomposition;

  const cd* col(std::size_t k) const {
    return states.data() + std::size_t(dim) * k;
  }
  cd* col(std::size_t k) { return states.data() + std::size_t(dim) * k; }
};

// |psi(t)> = exp(-i H_1 t) |psi> at every grid point. Eigendecomposition up
// to max_dense_L, Lanczos with adaptive substep halving above it (either can
// be forced). The grid need not be sorted; steps run between consecutive
// entries. The norm is checked to 1e-9 at every point.
Trajectory evolve_state(const ModelParams& h1, const std::vector<cd>& state,
                        const std::vector<double>& times,
                        std::optional<PropagationMethod> method = std::nullopt,
                        int max_dense_L = 12);

struct MatrixElementSeries {
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  std::vector<cd> values;  // <n(t)| O |m(t)> over the grid
  PropagationMethod method = PropagationMethod::EigenDecomposition;
};

// <n|exp(i H_1 t) O exp(-i H_1 t)|m> with the observable applied matrix-free.
// The Lanczos path streams both states in lockstep, so memory stays O(dim).
MatrixElementSeries matrix_element_series(
    const BasisState& n, const BasisState& m, const Observable& obs,
    const ModelParams& h1, const std::vector<double>& times,
    std::optional<PropagationMethod> method = std::nullopt,
    int max_dense_L = 12);

// One matrix-element series per plan representative, expanded by the plan
// signs to all retained pairs and contracted with the truncated density
// matrix. The imaginary residue of the contraction must stay below 1e-9.
// When element_errors is non-empty the statistical band is attached.
TimeSeries reconstruct(const TruncatedDensityMatrix& trunc,
                       const OrbitPlan& plan, const Observable& obs,
                       const ModelParams& h1, const std::vector<double>& times,
                       const std::vector<ElementError>& element_errors = {},
                       int threads = 0, int max_dense_L = 12);

// Sampling-error quadrature: per grid point, the root sum of squares of
// delta_mn * |O_nm(t)| over ordered retained pairs, with |O_nm| read off the
// pair's representative series. rep_series must align with
// plan.representatives, one series per representative over `times`.
std::vector<double> statistical_band(
    const OrbitPlan& plan, const std::vector<MatrixElementSeries>& rep_series,
    const std::vector<ElementError>& element_errors,
    const std::vector<double>& times);

// Relative L2 distance of two series on one grid, by trapezoidal quadrature:
// sqrt(int |exact - truncated|^2 dt / int |exact|^2 dt).
double truncation_error(const TimeSeries& exact, const TimeSeries& truncated);

// t in [0, 10] with 201 points.
std::vector<double> default_time_grid();

// Header t,value,stat_err; the last field is empty when no band is attached.
std::string time_series_csv(const TimeSeries& ts);

}  // namespace rhodyn
