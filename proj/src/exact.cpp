#include "rhodyn/exact.hpp"

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>

#include "rhodyn/kernels.hpp"

static_assert(std::endian::native == std::endian::little,
              "spectrum cache blobs are little-endian");

namespace rhodyn {

const char* rho_source_name(RhoSource s) {
  switch (s) {
    case RhoSource::Exact: return "exact";
    case RhoSource::DMQMC: return "dmqmc";
    case RhoSource::Truncated: return "truncated";
  }
  return "?";
}

double DensityMatrix::at(std::uint32_t m, std::uint32_t n) const {
  if (m > n) std::swap(m, n);
  RhoEntry probe{m, n, 0.0};
  auto it = std::lower_bound(entries.begin(), entries.end(), probe,
                             [](const RhoEntry& a, const RhoEntry& b) {
                               return a.m != b.m ? a.m < b.m : a.n < b.n;
                             });
  if (it != entries.end() && it->m == m && it->n == n) return it->val;
  return 0.0;
}

void DensityMatrix::sort_entries() {
  std::sort(entries.begin(), entries.end(),
            [](const RhoEntry& a, const RhoEntry& b) {
              return a.m != b.m ? a.m < b.m : a.n < b.n;
            });
}

double DensityMatrix::recompute_trace() {
  double t = 0.0;
  for (const RhoEntry& e : entries)
    if (e.m == e.n) t += e.val;
  trace = t;
  return t;
}

linalg::DMat DensityMatrix::dense() const {
  if (L > 14) throw CapacityError("dense density matrix above L=14");
  linalg::DMat d(dim(), dim());
  for (const RhoEntry& e : entries) {
    d.at(e.m, e.n) = e.val;
    d.at(e.n, e.m) = e.val;
  }
  return d;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Bit-exact textual parameter key (%a prints the full float).
std::string spectrum_key(const ModelParams& p) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "L=%d J=%a g=%a h=%a hs=%a basis=%s", p.L,
                p.J, p.g, p.h, p.h_s, basis_name(p.basis));
  return buf;
}

constexpr char kCacheMagic[8] = {'R', 'H', 'O', 'S', 'P', 'E', 'C', '1'};

struct CacheHeader {
  char magic[8];
  std::int32_t L;
  std::int32_t basis;
  double J, g, h, h_s;
};

std::string cache_path_for(const std::string& key) {
  std::string dir = env_or("RHODYN_CACHE_DIR", "");
  if (dir.empty()) return "";
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  char name[64];
  std::snprintf(name, sizeof name, "spec_%016" PRIx64 ".bin", fnv1a(key));
  return dir + "/" + name;
}

bool load_spectrum(const std::string& path, const ModelParams& p,
                   Spectrum& out) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return false;
  CacheHeader hd{};
  bool ok = std::fread(&hd, sizeof hd, 1, f) == 1 &&
            std::memcmp(hd.magic, kCacheMagic, 8) == 0 && hd.L == p.L &&
            hd.basis == (p.basis == Basis::Z ? 0 : 1) && hd.J == p.J &&
            hd.g == p.g && hd.h == p.h && hd.h_s == p.h_s;
  if (ok) {
    std::size_t n = std::size_t(1) << p.L;
    out.params = p;
    out.energies.resize(n);
    out.vectors = linalg::DMat(static_cast<std::int64_t>(n),
                               static_cast<std::int64_t>(n));
    ok = std::fread(out.energies.data(), sizeof(double), n, f) == n &&
         std::fread(out.vectors.a.data(), sizeof(double), n * n, f) == n * n;
  }
  std::fclose(f);
  return ok;
}

void store_spectrum(const std::string& path, const Spectrum& s) {
  std::string tmp = path + ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) return;
  CacheHeader hd{};
  std::memcpy(hd.magic, kCacheMagic, 8);
  hd.L = s.params.L;
  hd.basis = s.params.basis == Basis::Z ? 0 : 1;
  hd.J = s.params.J;
  hd.g = s.params.g;
  hd.h = s.params.h;
  hd.h_s = s.params.h_s;
  std::size_t n = s.energies.size();
  bool ok = std::fwrite(&hd, sizeof hd, 1, f) == 1 &&
            std::fwrite(s.energies.data(), sizeof(double), n, f) == n &&
            std::fwrite(s.vectors.a.data(), sizeof(double), n * n, f) == n * n;
  std::fclose(f);
  std::error_code ec;
  if (ok)
    std::filesystem::rename(tmp, path, ec);
  else
    std::filesystem::remove(tmp, ec);
}

std::mutex g_memo_mu;
std::map<std::string, std::shared_ptr<const Spectrum>> g_memo;
std::deque<std::string> g_memo_order;
constexpr std::size_t kMemoSlots = 3;

}  // namespace

std::shared_ptr<const Spectrum> diagonalize_cached(const ModelParams& params,
                                                   int max_dense_L) {
  params.validate();
  if (params.L > max_dense_L)
    throw CapacityError(
        "dense diagonalization limited to L <= " +
        std::to_string(max_dense_L) +
        " (requested L = " + std::to_string(params.L) +
        "); use the Krylov dynamics path instead");

  std::string key = spectrum_key(params);
  {
    std::lock_guard<std::mutex> lock(g_memo_mu);
    auto it = g_memo.find(key);
    if (it != g_memo.end()) return it->second;
  }

  auto spec = std::make_shared<Spectrum>();
  std::string path = cache_path_for(key);
  if (path.empty() || !load_spectrum(path, params, *spec)) {
    spec->params = params;
    spec->vectors = hamiltonian_op(params).dense();
    spec->energies = linalg::eig_sym(spec->vectors);
    if (!path.empty()) store_spectrum(path, *spec);
  }

  std::lock_guard<std::mutex> lock(g_memo_mu);
  auto [it, inserted] = g_memo.emplace(key, spec);
  if (inserted) {
    g_memo_order.push_back(key);
    while (g_memo_order.size() > kMemoSlots) {
      g_memo.erase(g_memo_order.front());
      g_memo_order.pop_front();
    }
  }
  return it->second;
}

Spectrum diagonalize(const ModelParams& params, int max_dense_L) {
  return *diagonalize_cached(params, max_dense_L);
}

DensityMatrix thermal_density_matrix(const ModelParams& params, double beta,
                                     double store_threshold, int max_dense_L) {
  params.validate();
  if (beta < 0.0) throw ConfigError("beta must be nonnegative");

  DensityMatrix rho;
  rho.L = params.L;
  rho.basis = params.basis;
  rho.source = RhoSource::Exact;

  std::int64_t n = params.dim();
  if (beta == 0.0) {
    double p = std::pow(2.0, -params.L);
    rho.entries.reserve(static_cast<std::size_t>(n));
    for (std::int64_t m = 0; m < n; ++m)
      rho.entries.push_back({static_cast<std::uint32_t>(m),
                             static_cast<std::uint32_t>(m), p});
    rho.recompute_trace();
    return rho;
  }

  auto spec = diagonalize_cached(params, max_dense_L);
  std::vector<double> w(static_cast<std::size_t>(n));
  double e0 = spec->energies.front();
  double z = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    w[static_cast<std::size_t>(k)] =
        std::exp(-beta * (spec->energies[static_cast<std::size_t>(k)] - e0));
    z += w[static_cast<std::size_t>(k)];
  }
  linalg::DMat a = spec->vectors;
  for (std::int64_t k = 0; k < n; ++k) {
    double s = std::sqrt(w[static_cast<std::size_t>(k)] / z);
    double* c = a.col(k);
    for (std::int64_t i = 0; i < n; ++i) c[i] *= s;
  }
  linalg::DMat full = linalg::aat(a);

  for (std::uint32_t m = 0; m < static_cast<std::uint32_t>(n); ++m)
    for (std::uint32_t nn = m; nn < static_cast<std::uint32_t>(n); ++nn) {
      double v = full.at(m, nn);
      if (std::abs(v) >= store_threshold) rho.entries.push_back({m, nn, v});
    }
  double tr = rho.recompute_trace();
  if (tr <= 0.0) throw NumericalError("thermal state lost its trace");
  for (RhoEntry& e : rho.entries) e.val /= tr;
  rho.recompute_trace();
  return rho;
}

namespace {

// B = V^T Op V with Op applied matrix-free column by column.
linalg::DMat conjugate_into_eigenbasis(const SparseOp& op,
                                       const linalg::DMat& v) {
  linalg::DMat ov(v.rows, v.cols);
  for (std::int64_t j = 0; j < v.cols; ++j)
    op.apply_add_real(v.col(j), ov.col(j));
  linalg::DMat b(v.cols, v.cols);
  linalg::gemm(true, false, 1.0, v, ov, 0.0, b);
  return b;
}

}  // namespace

TimeSeries heisenberg_expectation(const DensityMatrix& rho,
                                  const Observable& obs,
                                  const ModelParams& quench,
                                  const std::vector<double>& times,
                                  int max_dense_L) {
  if (rho.L != quench.L || obs.L != quench.L)
    throw std::invalid_argument("heisenberg_expectation: L mismatch");
  if (rho.basis != quench.basis)
    throw std::invalid_argument(
        "heisenberg_expectation: rho and quench must share a basis");

  auto spec = diagonalize_cached(quench, max_dense_L);
  const linalg::DMat& v = spec->vectors;
  std::int64_t n = v.rows;

  linalg::DMat b = conjugate_into_eigenbasis(observable_op(obs, rho.basis), v);

  linalg::DMat rho_dense = rho.dense();
  linalg::DMat tmp(n, n), p(n, n);
  linalg::gemm(false, false, 1.0, rho_dense, v, 0.0, tmp);
  linalg::gemm(true, false, 1.0, v, tmp, 0.0, p);

  // m = p (*) b elementwise; value(t) = u(t)^dagger m u(t), u_k = e^{-i E_k t}
  linalg::DMat m(n, n);
  for (std::size_t i = 0; i < m.a.size(); ++i) m.a[i] = p.a[i] * b.a[i];

  std::int64_t nt = static_cast<std::int64_t>(times.size());
  linalg::DMat ure(n, nt), uim(n, nt);
  for (std::int64_t t = 0; t < nt; ++t) {
    double* cr = ure.col(t);
    double* ci = uim.col(t);
    for (std::int64_t k = 0; k < n; ++k) {
      double ph = -spec->energies[static_cast<std::size_t>(k)] *
                  times[static_cast<std::size_t>(t)];
      cr[k] = std::cos(ph);
      ci[k] = std::sin(ph);
    }
  }
  linalg::DMat yre(n, nt), yim(n, nt);
  linalg::gemm(false, false, 1.0, m, ure, 0.0, yre);
  linalg::gemm(false, false, 1.0, m, uim, 0.0, yim);

  TimeSeries out;
  out.times = times;
  out.values.resize(static_cast<std::size_t>(nt));
  for (std::int64_t t = 0; t < nt; ++t) {
    const double* cr = ure.col(t);
    const double* ci = uim.col(t);
    const double* r = yre.col(t);
    const double* im = yim.col(t);
    double acc = 0.0;
    for (std::int64_t k = 0; k < n; ++k) acc += cr[k] * r[k] + ci[k] * im[k];
    out.values[static_cast<std::size_t>(t)] = acc;
  }
  out.meta.source = rho_source_name(rho.source);
  out.meta.method = "eigendecomposition";
  out.meta.w = 1.0;
  out.meta.N_w = static_cast<std::int64_t>(rho.entries.size()) * 2 -
                 static_cast<std::int64_t>(
                     std::count_if(rho.entries.begin(), rho.entries.end(),
                                   [](const RhoEntry& e) { return e.m == e.n; }));
  out.meta.N_sim = 0;
  return out;
}

double tde_average(const ModelParams& h0, const ModelParams& h1,
                   const Observable& obs, double beta, int max_dense_L) {
  if (h0.L != h1.L || obs.L != h0.L)
    throw std::invalid_argument("tde_average: L mismatch");
  if (h0.basis != h1.basis)
    throw std::invalid_argument("tde_average: basis mismatch");
  if (beta < 0.0) throw ConfigError("beta must be nonnegative");

  if (beta == 0.0) {
    // Tr[O] / 2^L in exact integer arithmetic: both order parameters are
    // traceless, so the infinite-temperature plateau is exactly zero.
    long long acc = 0;
    std::int64_t n = h0.dim();
    for (std::int64_t bidx = 0; bidx < n; ++bidx)
      acc += obs.kind == ObsKind::StaggeredMagnetizationZ
                 ? staggered_sum(static_cast<std::uint32_t>(bidx), obs.L)
                 : magnetization_sum(static_cast<std::uint32_t>(bidx), obs.L);
    return static_cast<double>(acc) / (static_cast<double>(obs.L) *
                                       static_cast<double>(n));
  }

  auto s0 = diagonalize_cached(h0, max_dense_L);
  auto s1 = diagonalize_cached(h1, max_dense_L);
  std::int64_t n = s0->vectors.rows;

  linalg::DMat b = conjugate_into_eigenbasis(observable_op(obs, h0.basis),
                                             s1->vectors);
  linalg::DMat c(n, n);
  linalg::gemm(true, false, 1.0, s1->vectors, s0->vectors, 0.0, c);

  // Block-diagonal projection of b over degenerate quench levels.
  constexpr double kDegTol = 1e-10;
  linalg::DMat g(n, n);
  std::int64_t blk_lo = 0;
  while (blk_lo < n) {
    std::int64_t blk_hi = blk_lo + 1;
    while (blk_hi < n &&
           s1->energies[static_cast<std::size_t>(blk_hi)] -
                   s1->energies[static_cast<std::size_t>(blk_hi - 1)] <=
               kDegTol)
      ++blk_hi;
    for (std::int64_t k = 0; k < n; ++k) {
      const double* ck = c.col(k);
      double* gk = g.col(k);
      for (std::int64_t i = blk_lo; i < blk_hi; ++i) {
        double acc = 0.0;
        for (std::int64_t j = blk_lo; j < blk_hi; ++j)
          acc += b.at(i, j) * ck[j];
        gk[i] = acc;
      }
    }
    blk_lo = blk_hi;
  }

  double e0 = s0->energies.front();
  double z = 0.0, value = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    double w = std::exp(-beta * (s0->energies[static_cast<std::size_t>(k)] - e0));
    const double* ck = c.col(k);
    const double* gk = g.col(k);
    double de = 0.0;
    for (std::int64_t i = 0; i < n; ++i) de += ck[i] * gk[i];
    value += w * de;
    z += w;
  }
  return value / z;
}

}  // namespace rhodyn
