#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rhodyn/linalg.hpp"
#include "rhodyn/util.hpp"

// Mixed-field Ising chain on L sites with periodic boundaries:
//
//   H = sum_i [ J Z_i Z_{i+1} + g X_i + h Z_i + h_s (-1)^i Z_i ]
//
// J > 0 (antiferromagnetic), L even. Site i in {1..L} lives on bit (i-1),
// so site 1 is the least significant bit; bit value b maps to local
// eigenvalue 1 - 2b. A ket string "0101" reads sites 1..L left to right.
//
// The same operator can be represented in the z basis or the x basis
// (conjugation by a Hadamard on every site swaps X and Z), which turns the
// Hamiltonian into one real diagonal plus a list of bit-flip moves in either
// case. Note the literal PBC sum at L=2 visits the single bond twice; we keep
// that reading instead of special-casing.

namespace rhodyn {

enum class Basis { Z, X };

const char* basis_name(Basis b);
Basis basis_from_name(const std::string& s);

struct ModelParams {
  int L = 4;
  double J = 1.0;
  double g = 0.0;
  double h = 0.0;
  double h_s = 0.0;
  Basis basis = Basis::Z;

  std::int64_t dim() const { return std::int64_t(1) << L; }
  void validate() const;
};

struct BasisState {
  std::uint32_t bits = 0;
  int L = 0;
  Basis basis = Basis::Z;

  // "0101" = sites 1..L left to right; site 1 is the LSB.
  static BasisState from_ket(const std::string& ket, Basis basis = Basis::Z);
  std::string ket() const;
};

enum class ObsKind { StaggeredMagnetizationZ, MagnetizationX };

const char* obs_name(ObsKind k);
ObsKind obs_from_name(const std::string& s);

struct Observable {
  ObsKind kind = ObsKind::StaggeredMagnetizationZ;
  int L = 0;
};

// One bit-flip move: connects index b with b ^ mask at real amplitude amp.
struct FlipMove {
  std::uint32_t mask = 0;
  double amp = 0.0;
};

// Diagonal-plus-flips form shared by the Hamiltonian and the observables.
struct SparseOp {
  int L = 0;
  std::vector<double> diag;      // length 2^L
  std::vector<FlipMove> flips;   // distinct masks, zero amplitudes dropped

  std::int64_t dim() const { return std::int64_t(1) << L; }
  void apply_add(const cd* x, cd* y) const;  // y += Op * x
  void apply_add_real(const double* x, double* y) const;
  double max_row_abs_sum() const;
  linalg::DMat dense() const;
};

// sum_i z_i z_{i+1} (PBC), sum_i z_i, sum_i (-1)^i z_i for an L-bit index.
int ising_bond_sum(std::uint32_t b, int L);
int magnetization_sum(std::uint32_t b, int L);
int staggered_sum(std::uint32_t b, int L);

double hamiltonian_diagonal_entry(const ModelParams& p, std::uint32_t b);
SparseOp hamiltonian_op(const ModelParams& p);

// H * v in p.basis. Throws std::invalid_argument on dimension mismatch.
std::vector<cd> apply_hamiltonian(const ModelParams& p,
                                  const std::vector<cd>& v);

// Value of a basis-diagonal observable on a basis state. Throws
// std::invalid_argument when the observable is not diagonal in state.basis.
double observable_value(const Observable& obs, const BasisState& state);

bool observable_diagonal_in(const Observable& obs, Basis basis);
double observable_diagonal_entry(const Observable& obs, Basis basis,
                                 std::uint32_t b);
SparseOp observable_op(const Observable& obs, Basis basis);

// Tensor product of single-site Hadamards over all L sites (orthogonal
// involution; maps between the z and x representations).
std::vector<cd> rotate_basis(const std::vector<cd>& v, int L);
void rotate_basis_inplace(cd* v, int L);

// Sampling-basis heuristic: the thermal state of H_0 is z-sparse for small
// transverse field and x-sparse for large; the boundary case stays in z.
Basis default_basis_for(double g0);
ObsKind default_observable_for(Basis basis);

}  // namespace rhodyn
