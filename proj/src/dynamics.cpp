#include "rhodyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

#include "rhodyn/linalg.hpp"
#include "rhodyn/util.hpp"

namespace rhodyn {

namespace {

constexpr double kNormTol = 1e-9;
constexpr double kKrylovTol = 1e-9;
constexpr int kKrylovDim = 30;
constexpr int kMaxHalvings = 40;

double vnorm(const cd* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::norm(x[i]);
  return std::sqrt(s);
}

cd vdot(const cd* x, const cd* y, std::size_t n) {
  cd s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::conj(x[i]) * y[i];
  return s;
}

void vaxpy(cd* y, cd a, const cd* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct KrylovScratch {
  std::vector<std::vector<cd>> v;
  std::vector<cd> w;
  std::vector<cd> trial;
  std::vector<double> alpha, beta;
  std::vector<double> theta, od, zmat;
  std::vector<cd> y, y_prev;
};

// One substep psi -> exp(-i H dt) psi in a Lanczos subspace grown until the
// update stabilizes to tol. Returns false when kKrylovDim is not enough.
bool krylov_substep(const SparseOp& H, std::vector<cd>& psi, double dt,
                    double tol, double hscale, KrylovScratch& s) {
  const std::size_t dim = psi.size();
  const double beta0 = vnorm(psi.data(), dim);
  if (std::size_t(s.v.size()) < std::size_t(kKrylovDim))
    s.v.resize(kKrylovDim);
  for (auto& vec : s.v) vec.resize(dim);
  s.w.resize(dim);
  s.alpha.clear();
  s.beta.clear();
  s.y_prev.clear();

  for (std::size_t i = 0; i < dim; ++i) s.v[0][i] = psi[i] / beta0;

  bool converged = false;
  int k_used = 0;
  for (int j = 0; j < kKrylovDim; ++j) {
    cd* w = s.w.data();
    std::fill(s.w.begin(), s.w.end(), cd(0.0));
    H.apply_add(s.v[j].data(), w);
    if (j > 0) vaxpy(w, -s.beta[j - 1], s.v[j - 1].data(), dim);
    double a = vdot(s.v[j].data(), w, dim).real();
    vaxpy(w, -a, s.v[j].data(), dim);
    // One classical Gram-Schmidt touch-up against the active pair keeps the
    // recurrence orthogonal enough for a propagator without full storage.
    if (j > 0) {
      const cd c = vdot(s.v[j - 1].data(), w, dim);
      vaxpy(w, -c, s.v[j - 1].data(), dim);
    }
    {
      const cd c = vdot(s.v[j].data(), w, dim);
      vaxpy(w, -c, s.v[j].data(), dim);
      a += c.real();
    }
    s.alpha.push_back(a);
    const double b = vnorm(w, dim);
    const int k = j + 1;

    s.theta = s.alpha;
    s.od.assign(s.beta.begin(), s.beta.end());
    s.zmat.assign(std::size_t(k) * k, 0.0);
    linalg::eig_tridiag(s.theta, s.od, s.zmat);
    s.y.assign(k, cd(0.0));
    for (int l = 0; l < k; ++l) {
      const cd coef = std::polar(beta0 * s.zmat[std::size_t(l) * k], -dt * s.theta[l]);
      for (int i = 0; i < k; ++i)
        s.y[i] += s.zmat[std::size_t(l) * k + i] * coef;
    }
    k_used = k;

    if (k >= 2) {
      double diff2 = 0.0;
      for (int i = 0; i < k; ++i) {
        const cd prev = i < int(s.y_prev.size()) ? s.y_prev[i] : cd(0.0);
        diff2 += std::norm(s.y[i] - prev);
      }
      if (std::sqrt(diff2) <= tol * beta0) {
        converged = true;
        break;
      }
    }
    if (b <= 1e-12 * hscale) {
      converged = true;  // invariant subspace: the expansion is exact
      break;
    }
    if (k == kKrylovDim) break;
    s.beta.push_back(b);
    for (std::size_t i = 0; i < dim; ++i) s.v[j + 1][i] = w[i] / b;
    s.y_prev = s.y;
  }
  if (!converged) return false;

  std::fill(psi.begin(), psi.end(), cd(0.0));
  for (int i = 0; i < k_used; ++i) vaxpy(psi.data(), s.y[i], s.v[i].data(), dim);
  return true;
}

// Advance psi by dt, halving the substep until every piece converges and the
// norm survives.
void krylov_advance(const SparseOp& H, std::vector<cd>& psi, double dt,
                    double hscale, double t_target, KrylovScratch& s) {
  if (dt == 0.0) return;
  std::int64_t pieces = 1;
  for (int halvings = 0;; ++halvings) {
    s.trial = psi;
    bool ok = true;
    for (std::int64_t p = 0; p < pieces && ok; ++p)
      ok = krylov_substep(H, s.trial, dt / double(pieces), kKrylovTol, hscale, s);
    if (ok) {
      const double nn = vnorm(s.trial.data(), s.trial.size());
      if (std::abs(nn - 1.0) <= kNormTol) {
        psi.swap(s.trial);
        return;
      }
      ok = false;
    }
    if (halvings >= kMaxHalvings)
      throw NumericalError(
          "evolve_state: Lanczos step toward t = " + fmt_num(t_target) +
          " failed to converge: dt = " + fmt_num(dt) + " split into " +
          std::to_string(pieces) + " pieces, subspace " +
          std::to_string(kKrylovDim) + ", tolerance " + fmt_num(kKrylovTol));
    pieces *= 2;
  }
}

Trajectory evolve_dense(const ModelParams& h1, const std::vector<cd>& state,
                        const std::vector<double>& times, int max_dense_L) {
  const auto spec = diagonalize_cached(h1, max_dense_L);
  const std::int64_t dim = spec->vectors.rows;
  const std::int64_t nt = std::int64_t(times.size());
  const linalg::DMat& V = spec->vectors;

  linalg::DMat xre(dim, 1), xim(dim, 1);
  for (std::int64_t i = 0; i < dim; ++i) {
    xre.at(i, 0) = state[std::size_t(i)].real();
    xim.at(i, 0) = state[std::size_t(i)].imag();
  }
  linalg::DMat cre(dim, 1), cim(dim, 1);
  linalg::gemm(true, false, 1.0, V, xre, 0.0, cre);
  linalg::gemm(true, false, 1.0, V, xim, 0.0, cim);

  linalg::DMat dre(dim, nt), dim_(dim, nt);
  for (std::int64_t k = 0; k < nt; ++k)
    for (std::int64_t j = 0; j < dim; ++j) {
      const double ang = -spec->energies[std::size_t(j)] * times[std::size_t(k)];
      const double pr = std::cos(ang), pi = std::sin(ang);
      dre.at(j, k) = pr * cre.at(j, 0) - pi * cim.at(j, 0);
      dim_.at(j, k) = pr * cim.at(j, 0) + pi * cre.at(j, 0);
    }
  linalg::DMat yre(dim, nt), yim(dim, nt);
  linalg::gemm(false, false, 1.0, V, dre, 0.0, yre);
  linalg::gemm(false, false, 1.0, V, dim_, 0.0, yim);

  Trajectory out;
  out.dim = dim;
  out.times = times;
  out.method = PropagationMethod::EigenDecomposition;
  out.states.resize(std::size_t(dim) * nt);
  for (std::int64_t k = 0; k < nt; ++k)
    for (std::int64_t i = 0; i < dim; ++i)
      out.col(std::size_t(k))[i] = cd(yre.at(i, k), yim.at(i, k));
  return out;
}

void check_norm(const cd* col, std::size_t dim, double t) {
  const double nn = vnorm(col, dim);
  if (std::abs(nn - 1.0) > kNormTol)
    throw NumericalError("evolve_state: norm drifted to " + fmt_num(nn) +
                         " at t = " + fmt_num(t));
}

std::vector<cd> unit_state(std::uint32_t bits, std::size_t dim) {
  std::vector<cd> v(dim, cd(0.0));
  v.at(bits) = 1.0;
  return v;
}

}  // namespace

const char* propagation_method_name(PropagationMethod m) {
  return m == PropagationMethod::EigenDecomposition ? "eigendecomposition"
                                                    : "krylov";
}

Trajectory evolve_state(const ModelParams& h1, const std::vector<cd>& state,
                        const std::vector<double>& times,
                        std::optional<PropagationMethod> method,
                        int max_dense_L) {
  h1.validate();
  const std::size_t dim = std::size_t(1) << h1.L;
  if (state.size() != dim)
    throw std::invalid_argument("evolve_state: state dimension mismatch");
  if (times.empty())
    throw std::invalid_argument("evolve_state: empty time grid");
  if (std::abs(vnorm(state.data(), dim) - 1.0) > kNormTol)
    throw std::invalid_argument("evolve_state: input state must be normalized");

  const PropagationMethod me = method.value_or(
      h1.L <= max_dense_L ? PropagationMethod::EigenDecomposition
                          : PropagationMethod::Krylov);
  if (me == PropagationMethod::EigenDecomposition) {
    Trajectory out = evolve_dense(h1, state, times, max_dense_L);
    for (std::size_t k = 0; k < times.size(); ++k)
      check_norm(out.col(k), dim, times[k]);
    return out;
  }

  const SparseOp H = hamiltonian_op(h1);
  const double hscale = std::max(1.0, H.max_row_abs_sum());
  KrylovScratch scratch;
  Trajectory out;
  out.dim = std::int64_t(dim);
  out.times = times;
  out.method = PropagationMethod::Krylov;
  out.states.resize(dim * times.size());
  std::vector<cd> psi = state;
  double t_prev = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    krylov_advance(H, psi, times[k] - t_prev, hscale, times[k], scratch);
    t_prev = times[k];
    std::copy(psi.begin(), psi.end(), out.col(k));
    check_norm(out.col(k), dim, times[k]);
  }
  return out;
}

MatrixElementSeries matrix_element_series(
    const BasisState& n, const BasisState& m, const Observable& obs,
    const ModelParams& h1, const std::vector<double>& times,
    std::optional<PropagationMethod> method, int max_dense_L) {
  h1.validate();
  if (n.L != h1.L || m.L != h1.L || obs.L != h1.L)
    throw std::invalid_argument(
        "matrix_element_series: states, observable, and Hamiltonian must "
        "share L");
  if (n.basis != h1.basis || m.basis != h1.basis)
    throw std::invalid_argument(
        "matrix_element_series: states must live in the Hamiltonian basis");
  if (times.empty())
    throw std::invalid_argument("matrix_element_series: empty time grid");
  const std::size_t dim = std::size_t(1) << h1.L;
  if (n.bits >= dim || m.bits >= dim)
    throw std::invalid_argument("matrix_element_series: state index out of range");

  const SparseOp op = observable_op(obs, h1.basis);
  const PropagationMethod me = method.value_or(
      h1.L <= max_dense_L ? PropagationMethod::EigenDecomposition
                          : PropagationMethod::Krylov);

  MatrixElementSeries out;
  out.n = n.bits;
  out.m = m.bits;
  out.method = me;
  out.values.resize(times.size());
  std::vector<cd> tmp(dim);

  if (me == PropagationMethod::EigenDecomposition) {
    const Trajectory tn = evolve_state(h1, unit_state(n.bits, dim), times, me,
                                       max_dense_L);
    Trajectory tm_store;
    const Trajectory* tm = &tn;
    if (m.bits != n.bits) {
      tm_store = evolve_state(h1, unit_state(m.bits, dim), times, me,
                              max_dense_L);
      tm = &tm_store;
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
      std::fill(tmp.begin(), tmp.end(), cd(0.0));
      op.apply_add(tm->col(k), tmp.data());
      out.values[k] = vdot(tn.col(k), tmp.data(), dim);
    }
    return out;
  }

  // Lanczos path: walk the grid once, both states in lockstep, O(dim) memory.
  const SparseOp H = hamiltonian_op(h1);
  const double hscale = std::max(1.0, H.max_row_abs_sum());
  KrylovScratch scratch;
  std::vector<cd> psi_n = unit_state(n.bits, dim);
  std::vector<cd> psi_m = unit_state(m.bits, dim);
  const bool same = n.bits == m.bits;
  double t_prev = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double dt = times[k] - t_prev;
    krylov_advance(H, psi_n, dt, hscale, times[k], scratch);
    if (!same) krylov_advance(H, psi_m, dt, hscale, times[k], scratch);
    t_prev = times[k];
    check_norm(psi_n.data(), dim, times[k]);
    const cd* right = same ? psi_n.data() : psi_m.data();
    if (!same) check_norm(right, dim, times[k]);
    std::fill(tmp.begin(), tmp.end(), cd(0.0));
    op.apply_add(right, tmp.data());
    out.values[k] = vdot(psi_n.data(), tmp.data(), dim);
  }
  return out;
}

std::vector<double> statistical_band(
    const OrbitPlan& plan, const std::vector<MatrixElementSeries>& rep_series,
    const std::vector<ElementError>& element_errors,
    const std::vector<double>& times) {
  if (rep_series.size() != plan.representatives.size())
    throw std::invalid_argument(
        "statistical_band: one series per representative is required");
  std::unordered_map<std::uint64_t, std::size_t> ridx;
  for (std::size_t i = 0; i < plan.representatives.size(); ++i) {
    const auto& [rm, rn] = plan.representatives[i];
    if (rep_series[i].m != rm || rep_series[i].n != rn)
      throw std::invalid_argument(
          "statistical_band: series order must match plan.representatives");
    if (rep_series[i].values.size() != times.size())
      throw std::invalid_argument(
          "statistical_band: series grid does not match times");
    ridx.emplace((std::uint64_t(rm) << 32) | rn, i);
  }
  std::unordered_map<std::uint64_t, double> err;
  err.reserve(element_errors.size() * 2);
  for (const auto& e : element_errors) {
    if (e.m > e.n)
      throw std::invalid_argument(
          "statistical_band: error entries must be folded with m <= n");
    if (!(e.delta >= 0.0))
      throw std::invalid_argument("statistical_band: negative error entry");
    if (!err.emplace((std::uint64_t(e.m) << 32) | e.n, e.delta).second)
      throw std::invalid_argument("statistical_band: duplicate error entry");
  }

  std::vector<double> var(times.size(), 0.0);
  for (const auto& e : plan.expansion) {
    const auto it = err.find((std::uint64_t(e.m) << 32) | e.n);
    if (it == err.end())
      throw std::invalid_argument(
          "statistical_band: missing error entry for retained pair (" +
          std::to_string(e.m) + ", " + std::to_string(e.n) + ")");
    const double d = it->second;
    if (d == 0.0) continue;
    const auto& series =
        rep_series[ridx.at((std::uint64_t(e.rep_m) << 32) | e.rep_n)];
    const double mult = e.m == e.n ? 1.0 : 2.0;
    for (std::size_t k = 0; k < times.size(); ++k)
      var[k] += mult * d * d * std::norm(series.values[k]);
  }
  std::vector<double> band(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) band[k] = std::sqrt(var[k]);
  return band;
}

TimeSeries reconstruct(const TruncatedDensityMatrix& trunc,
                       const OrbitPlan& plan, const Observable& obs,
                       const ModelParams& h1, const std::vector<double>& times,
                       const std::vector<ElementError>& element_errors,
                       int threads, int max_dense_L) {
  h1.validate();
  if (times.empty()) throw std::invalid_argument("reconstruct: empty time grid");
  if (plan.L != h1.L || obs.L != h1.L || trunc.rho_w.L != h1.L)
    throw std::invalid_argument("reconstruct: inconsistent L");
  if (trunc.rho_w.basis != h1.basis)
    throw std::invalid_argument(
        "reconstruct: density matrix and Hamiltonian basis disagree");
  if (plan.obs.kind != obs.kind)
    throw std::invalid_argument(
        "reconstruct: plan was built for a different observable");

  std::vector<std::uint64_t> want(trunc.index_set.size());
  for (std::size_t i = 0; i < trunc.index_set.size(); ++i)
    want[i] = (std::uint64_t(trunc.index_set[i].m) << 32) | trunc.index_set[i].n;
  std::sort(want.begin(), want.end());
  std::vector<std::uint64_t> got;
  got.reserve(plan.expansion.size() + plan.excluded.size());
  for (const auto& e : plan.expansion)
    got.push_back((std::uint64_t(e.m) << 32) | e.n);
  for (const auto& e : plan.excluded)
    got.push_back((std::uint64_t(e.m) << 32) | e.n);
  std::sort(got.begin(), got.end());
  if (want != got)
    throw std::invalid_argument(
        "reconstruct: plan does not cover the truncated index set");

  const std::size_t nrep = plan.representatives.size();
  std::vector<MatrixElementSeries> rep_series(nrep);
  std::exception_ptr first_error;
  std::once_flag error_once;
  parallel_for(std::int64_t(nrep), resolve_threads(threads),
               [&](std::int64_t i) {
                 try {
                   const auto& [rm, rn] = plan.representatives[std::size_t(i)];
                   const BasisState bn{rn, h1.L, h1.basis};
                   const BasisState bm{rm, h1.L, h1.basis};
                   rep_series[std::size_t(i)] = matrix_element_series(
                       bn, bm, obs, h1, times, std::nullopt, max_dense_L);
                 } catch (...) {
                   std::call_once(error_once,
                                  [&] { first_error = std::current_exception(); });
                 }
               });
  if (first_error) std::rethrow_exception(first_error);

  // Per-orbit coefficients: diagonal members keep their complex series (its
  // imaginary part is the residue check), off-diagonal members enter through
  // the real part twice, once per orientation.
  std::unordered_map<std::uint64_t, std::size_t> ridx;
  for (std::size_t i = 0; i < nrep; ++i) {
    const auto& [rm, rn] = plan.representatives[i];
    ridx.emplace((std::uint64_t(rm) << 32) | rn, i);
  }
  std::vector<double> w_diag(nrep, 0.0), w_off(nrep, 0.0);
  for (const auto& e : plan.expansion) {
    const double val = trunc.rho_w.at(e.m, e.n);
    const std::size_t i = ridx.at((std::uint64_t(e.rep_m) << 32) | e.rep_n);
    if (e.m == e.n)
      w_diag[i] += double(e.sign) * val;
    else
      w_off[i] += 2.0 * double(e.sign) * val;
  }

  TimeSeries out;
  out.times = times;
  out.values.resize(times.size());
  std::vector<double> re_terms(nrep), im_terms(nrep);
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t i = 0; i < nrep; ++i) {
      const cd s = rep_series[i].values[k];
      re_terms[i] = (w_diag[i] + w_off[i]) * s.real();
      im_terms[i] = w_diag[i] * s.imag();
    }
    const double residue = pairwise_sum(im_terms);
    if (std::abs(residue) > 1e-9)
      throw NumericalError("reconstruct: imaginary residue " +
                           fmt_num(residue) + " at t = " + fmt_num(times[k]));
    out.values[k] = pairwise_sum(re_terms);
  }

  out.meta.source = rho_source_name(trunc.rho_w.source);
  out.meta.method = propagation_method_name(
      nrep > 0 ? rep_series[0].method
               : (h1.L <= max_dense_L ? PropagationMethod::EigenDecomposition
                                      : PropagationMethod::Krylov));
  out.meta.w = trunc.weight;
  out.meta.N_w = trunc.N_w;
  out.meta.N_sim = plan.N_sim;
  if (!element_errors.empty())
    out.stat_err = statistical_band(plan, rep_series, element_errors, times);
  return out;
}

double truncation_error(const TimeSeries& exact, const TimeSeries& truncated) {
  const std::size_t n = exact.times.size();
  if (n != truncated.times.size() || exact.times != truncated.times)
    throw std::invalid_argument("truncation_error: grids differ");
  if (n < 2)
    throw std::invalid_argument(
        "truncation_error: at least two grid points are required");
  for (std::size_t k = 1; k < n; ++k)
    if (!(exact.times[k] > exact.times[k - 1]))
      throw std::invalid_argument(
          "truncation_error: times must be strictly increasing");

  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double left = k == 0 ? exact.times[0] : exact.times[k - 1];
    const double right = k + 1 == n ? exact.times[n - 1] : exact.times[k + 1];
    const double w = 0.5 * (right - left);
    const double d = exact.values[k] - truncated.values[k];
    num += w * d * d;
    den += w * exact.values[k] * exact.values[k];
  }
  if (den == 0.0)
    throw NumericalError(
        "truncation_error: undefined, the reference series is identically "
        "zero");
  return std::sqrt(num / den);
}

std::vector<double> default_time_grid() {
  std::vector<double> t(201);
  for (int k = 0; k <= 200; ++k) t[std::size_t(k)] = 10.0 * k / 200.0;
  return t;
}

std::string time_series_csv(const TimeSeries& ts) {
  if (ts.values.size() != ts.times.size() ||
      (!ts.stat_err.empty() && ts.stat_err.size() != ts.times.size()))
    throw std::invalid_argument("time_series_csv: ragged series");
  std::string out = "t,value,stat_err\n";
  for (std::size_t k = 0; k < ts.times.size(); ++k) {
    out += round_trip(ts.times[k]);
    out += ',';
    out += round_trip(ts.values[k]);
    out += ',';
    if (!ts.stat_err.empty()) out += round_trip(ts.stat_err[k]);
    out += '\n';
  }
  return out;
}

}  // namespace rhodyn
