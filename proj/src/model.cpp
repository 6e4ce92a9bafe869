#include "rhodyn/model.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>

#include "rhodyn/kernels.hpp"

namespace rhodyn {

namespace {

std::uint32_t lbits(int L) {
  return L == 32 ? 0xffffffffu : ((1u << L) - 1u);
}

std::uint32_t rol_bits(std::uint32_t b, int L) {
  return ((b << 1) | (b >> (L - 1))) & lbits(L);
}

// Masks of even/odd bit positions, i.e. odd/even site numbers.
std::uint32_t even_bit_mask(int L) { return 0x55555555u & lbits(L); }
std::uint32_t odd_bit_mask(int L) { return 0xaaaaaaaau & lbits(L); }

}  // namespace

const char* basis_name(Basis b) { return b == Basis::Z ? "z" : "x"; }

Basis basis_from_name(const std::string& s) {
  if (s == "z" || s == "Z") return Basis::Z;
  if (s == "x" || s == "X") return Basis::X;
  throw ConfigError("unknown basis '" + s + "' (expected z or x)");
}

const char* obs_name(ObsKind k) {
  return k == ObsKind::StaggeredMagnetizationZ ? "staggered_magnetization_z"
                                               : "magnetization_x";
}

ObsKind obs_from_name(const std::string& s) {
  if (s == "staggered_magnetization_z" || s == "mz_pi" || s == "mzpi")
    return ObsKind::StaggeredMagnetizationZ;
  if (s == "magnetization_x" || s == "mx") return ObsKind::MagnetizationX;
  throw ConfigError("unknown observable '" + s + "'");
}

void ModelParams::validate() const {
  if (L < 2 || L > 20 || L % 2 != 0)
    throw ConfigError("L must be even and within [2, 20], got " +
                      std::to_string(L));
  if (!(J > 0.0))
    throw ConfigError("J must be positive (antiferromagnetic convention)");
}

BasisState BasisState::from_ket(const std::string& ket, Basis basis) {
  BasisState s;
  s.L = static_cast<int>(ket.size());
  s.basis = basis;
  for (int i = 0; i < s.L; ++i) {
    char c = ket[static_cast<std::size_t>(i)];
    if (c == '1')
      s.bits |= (1u << i);
    else if (c != '0')
      throw std::invalid_argument("ket string must be over {0,1}");
  }
  return s;
}

std::string BasisState::ket() const {
  std::string out(static_cast<std::size_t>(L), '0');
  for (int i = 0; i < L; ++i)
    if (bits & (1u << i)) out[static_cast<std::size_t>(i)] = '1';
  return out;
}

int ising_bond_sum(std::uint32_t b, int L) {
  // z_i z_{i+1} = 1 - 2 (b_i xor b_{i+1}); the PBC sum over L bonds.
  return L - 2 * std::popcount(b ^ rol_bits(b, L));
}

int magnetization_sum(std::uint32_t b, int L) {
  return L - 2 * std::popcount(b);
}

int staggered_sum(std::uint32_t b, int L) {
  // sum_i (-1)^i z_i with sites from 1: odd sites carry -1.
  return 2 * (std::popcount(b & even_bit_mask(L)) -
              std::popcount(b & odd_bit_mask(L)));
}

double hamiltonian_diagonal_entry(const ModelParams& p, std::uint32_t b) {
  if (p.basis == Basis::Z) {
    return p.J * ising_bond_sum(b, p.L) + p.h * magnetization_sum(b, p.L) +
           p.h_s * staggered_sum(b, p.L);
  }
  // x basis: only the transverse term is diagonal.
  return p.g * magnetization_sum(b, p.L);
}

namespace {

std::vector<FlipMove> collect_moves(const std::map<std::uint32_t, double>& m) {
  std::vector<FlipMove> out;
  out.reserve(m.size());
  for (const auto& [mask, amp] : m)
    if (amp != 0.0 && mask != 0) out.push_back({mask, amp});
  return out;
}

}  // namespace

SparseOp hamiltonian_op(const ModelParams& p) {
  SparseOp op;
  op.L = p.L;
  std::int64_t n = p.dim();
  op.diag.resize(static_cast<std::size_t>(n));
  for (std::int64_t b = 0; b < n; ++b)
    op.diag[static_cast<std::size_t>(b)] =
        hamiltonian_diagonal_entry(p, static_cast<std::uint32_t>(b));

  std::map<std::uint32_t, double> moves;
  if (p.basis == Basis::Z) {
    for (int j = 0; j < p.L; ++j) moves[1u << j] += p.g;
  } else {
    // Conjugated operator: J X_i X_{i+1} bonds plus (h + (-1)^i h_s) X_i.
    for (int j = 0; j < p.L; ++j) {
      std::uint32_t bond = (1u << j) | (1u << ((j + 1) % p.L));
      moves[bond] += p.J;
      double site_amp = p.h + ((j % 2 == 0) ? -p.h_s : p.h_s);
      moves[1u << j] += site_amp;
    }
  }
  op.flips = collect_moves(moves);
  return op;
}

void SparseOp::apply_add(const cd* x, cd* y) const {
  std::size_t n = static_cast<std::size_t>(dim());
  kern::diag_axpy(diag.data(), x, y, n);
  for (const FlipMove& f : flips) kern::flip_axpy(f.amp, x, y, n, f.mask);
}

void SparseOp::apply_add_real(const double* x, double* y) const {
  std::size_t n = static_cast<std::size_t>(dim());
  for (std::size_t i = 0; i < n; ++i) y[i] += diag[i] * x[i];
  for (const FlipMove& f : flips)
    for (std::size_t i = 0; i < n; ++i) y[i] += f.amp * x[i ^ f.mask];
}

double SparseOp::max_row_abs_sum() const {
  double off = 0.0;
  for (const FlipMove& f : flips) off += std::abs(f.amp);
  double best = 0.0;
  for (double d : diag) best = std::max(best, std::abs(d) + off);
  return best;
}

linalg::DMat SparseOp::dense() const {
  std::int64_t n = dim();
  if (L > 14) throw CapacityError("dense operator materialization above L=14");
  linalg::DMat m(n, n);
  for (std::int64_t j = 0; j < n; ++j) {
    m.at(j, j) += diag[static_cast<std::size_t>(j)];
    for (const FlipMove& f : flips)
      m.at(j ^ static_cast<std::int64_t>(f.mask), j) += f.amp;
  }
  return m;
}

std::vector<cd> apply_hamiltonian(const ModelParams& p,
                                  const std::vector<cd>& v) {
  if (static_cast<std::int64_t>(v.size()) != p.dim())
    throw std::invalid_argument("apply_hamiltonian: vector length != 2^L");
  SparseOp op = hamiltonian_op(p);
  std::vector<cd> y(v.size(), cd(0.0, 0.0));
  op.apply_add(v.data(), y.data());
  return y;
}

bool observable_diagonal_in(const Observable& obs, Basis basis) {
  return (obs.kind == ObsKind::StaggeredMagnetizationZ) == (basis == Basis::Z);
}

double observable_value(const Observable& obs, const BasisState& state) {
  if (obs.L != state.L)
    throw std::invalid_argument("observable_value: L mismatch");
  if (!observable_diagonal_in(obs, state.basis))
    throw std::invalid_argument(
        "observable_value: observable is not diagonal in the state's basis; "
        "use the matrix-element machinery instead");
  return observable_diagonal_entry(obs, state.basis, state.bits);
}

double observable_diagonal_entry(const Observable& obs, Basis basis,
                                 std::uint32_t b) {
  if (!observable_diagonal_in(obs, basis))
    throw std::invalid_argument("observable not diagonal in this basis");
  if (obs.kind == ObsKind::StaggeredMagnetizationZ)
    return static_cast<double>(staggered_sum(b, obs.L)) / obs.L;
  return static_cast<double>(magnetization_sum(b, obs.L)) / obs.L;
}

SparseOp observable_op(const Observable& obs, Basis basis) {
  SparseOp op;
  op.L = obs.L;
  std::int64_t n = op.dim();
  op.diag.assign(static_cast<std::size_t>(n), 0.0);
  if (observable_diagonal_in(obs, basis)) {
    for (std::int64_t b = 0; b < n; ++b)
      op.diag[static_cast<std::size_t>(b)] = observable_diagonal_entry(
          obs, basis, static_cast<std::uint32_t>(b));
    return op;
  }
  // Off-diagonal representation: single-site flips with the site coefficient.
  double inv_l = 1.0 / obs.L;
  for (int j = 0; j < obs.L; ++j) {
    double amp = inv_l;
    if (obs.kind == ObsKind::StaggeredMagnetizationZ)
      amp = (j % 2 == 0) ? -inv_l : inv_l;
    op.flips.push_back({1u << j, amp});
  }
  return op;
}

void rotate_basis_inplace(cd* v, int L) {
  kern::walsh_unnorm(v, L);
  kern::scal(std::pow(2.0, -0.5 * L), v, std::size_t(1) << L);
}

std::vector<cd> rotate_basis(const std::vector<cd>& v, int L) {
  if (static_cast<std::int64_t>(v.size()) != (std::int64_t(1) << L))
    throw std::invalid_argument("rotate_basis: vector length != 2^L");
  std::vector<cd> out = v;
  rotate_basis_inplace(out.data(), L);
  return out;
}

Basis default_basis_for(double g0) {
  return g0 > 1.0 ? Basis::X : Basis::Z;
}

ObsKind default_observable_for(Basis basis) {
  return basis == Basis::Z ? ObsKind::StaggeredMagnetizationZ
                           : ObsKind::MagnetizationX;
}

}  // namespace rhodyn
