#pragma once

// Lattice symmetry machinery for the staggered Ising chain: the point group
// generated by spin flip S, bond-centered reflection R, and translation T_1,
// orbit averaging of sampled density matrices, and simulation plans that
// reduce an index set to one representative matrix element per orbit.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rhodyn/exact.hpp"
#include "rhodyn/model.hpp"

namespace rhodyn {

// Group element S^s R^a T_1^b acting on computational basis states.
// Application order is fixed: translate by b, then reflect if a = 1, then
// complement all bits if s = 1.
struct SymmetryElement {
  int s = 0;
  int a = 0;
  int b = 0;
};

std::uint32_t apply_bits(const SymmetryElement& g, std::uint32_t bits, int L);
BasisState apply_element(const SymmetryElement& g, const BasisState& state);

// Sign picked up by the observable under conjugation with R^a T_1^b.
// Spin flips lie outside the post-quench symmetry group; s != 0 throws.
int sign_of(const SymmetryElement& g, const Observable& obs);

// Symmetry group of the initial Hamiltonian: two-site translations always,
// extended by {S^s R^a T_1^b : s + a + b even} when the uniform field
// vanishes. The post-quench group is the dihedral {R^a T_1^b}.
std::vector<SymmetryElement> initial_group(const ModelParams& h0);
std::vector<SymmetryElement> quench_group(int L);

// Replace every entry by the average over its orbit under the initial-state
// group, writing the average to all orbit members (absent members enter the
// average as zero). Entries with |avg| <= drop_tol are dropped. Only z-basis
// matrices are supported.
DensityMatrix symmetrize_rho(const DensityMatrix& rho, const ModelParams& h0,
                             double drop_tol = 0.0);

// Why a retained pair needs no simulation: some group relation forces the
// matrix element itself to vanish, or forces its real part (the only piece a
// real symmetric density matrix couples to) to vanish.
enum class ExcludeReason { ElementZero, RealPartZero };
const char* exclude_reason_name(ExcludeReason r);

struct PlanEntry {
  std::uint32_t m = 0;
  std::uint32_t n = 0;
  std::uint32_t rep_m = 0;
  std::uint32_t rep_n = 0;
  int sign = 1;
};

struct ExcludedPair {
  std::uint32_t m = 0;
  std::uint32_t n = 0;
  ExcludeReason reason = ExcludeReason::ElementZero;
};

struct OrbitPlan {
  Observable obs;
  int L = 0;
  // Folded (m, n) pairs, one per orbit that still needs a simulation.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> representatives;
  // Every retained, non-excluded pair mapped to its representative and the
  // relative sign of its real part.
  std::vector<PlanEntry> expansion;
  std::vector<ExcludedPair> excluded;
  std::int64_t N_sim = 0;
};

// Group the index set into orbits under the post-quench dihedral group
// (acting on both indices) plus Hermitian transposition. Pairs whose matrix
// element is forced to vanish are excluded; each surviving orbit keeps its
// lexicographically smallest retained pair as representative.
OrbitPlan plan_simulations(const std::vector<RhoEntry>& index_set,
                           const Observable& obs, const ModelParams& h1);

std::string orbit_plan_json(const OrbitPlan& plan);

}  // namespace rhodyn
