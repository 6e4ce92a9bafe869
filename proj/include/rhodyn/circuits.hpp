#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <utility>
#include <string>
#include <vector>

#include "rhodyn/model.hpp"
#include "rhodyn/series.hpp"
#include "rhodyn/util.hpp"

namespace rhodyn {

// Dense complex matrix, column major; payload of controlled-unitary gates and
// input of the Hadamard test.
struct ZMat {
  std::int64_t n = 0;
  std::vector<cd> a;

  ZMat() = default;
  explicit ZMat(std::int64_t dim)
      : n(dim), a(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim)) {}

  cd& at(std::int64_t i, std::int64_t j) {
    return a[static_cast<std::size_t>(j) * n + i];
  }
  cd at(std::int64_t i, std::int64_t j) const {
    return a[static_cast<std::size_t>(j) * n + i];
  }
};

enum class GateKind { H, X, S, CNOT, ControlledUnitary };

// Single gate. H/X/S use target only. CNOT uses control and target. A
// controlled unitary is controlled on `control` and acts on every other
// qubit, with the sub-register index formed by dropping the control bit;
// it occupies the whole register for layer-disjointness purposes.
struct Gate {
  GateKind kind = GateKind::H;
  int target = 0;
  int control = -1;
  std::shared_ptr<const ZMat> u;

  Gate() = default;
  Gate(GateKind k, int t, int c = -1, std::shared_ptr<const ZMat> payload = nullptr)
      : kind(k), target(t), control(c), u(std::move(payload)) {}
};

struct Circuit {
  int num_qubits = 0;
  std::vector<std::vector<Gate>> layers;  // no shared qubits within a layer

  void validate() const;          // index ranges and layer disjointness
  std::vector<Gate> gates() const;  // flattened in layer order
  int cnot_layers() const;
  std::int64_t gate_count() const;
};

enum class SupVariant { PsiPlus, PsiMinus, PhiPlus, PhiMinus };

const char* variant_name(SupVariant v);
SupVariant variant_from_name(const std::string& s);

// Target state (|n> + s|m>)/sqrt(2) with s = +1, -1, +i, -i for the four
// variants in order.
struct SuperpositionSpec {
  BasisState n;
  BasisState m;
  SupVariant variant = SupVariant::PsiPlus;
};

// Prepares the superposition from |0...0>: pivot block on the lowest
// differing bit, balanced CNOT fan-out over the differing set (depth
// ceil(log2 |S|)), then one layer of X gates writing the |n> pattern.
Circuit synthesize(const SuperpositionSpec& spec);

// Exact statevector after applying the gates in layer order to the given
// computational basis state. Register capped at 20 qubits.
std::vector<cd> simulate(const Circuit& c, std::uint64_t initial);

// Recombination of the four variant expectation series into the complex
// matrix element: Re = (psi_plus - psi_minus)/2, Im = (phi_minus - phi_plus)/2.
// All four series must share one time grid.
std::vector<cd> matrix_element_from_expectations(const TimeSeries& psi_plus,
                                                 const TimeSeries& psi_minus,
                                                 const TimeSeries& phi_plus,
                                                 const TimeSeries& phi_minus);

// Ancilla <Z> of the Hadamard-test circuit: Re<psi|U|psi> for a = 0,
// Im<psi|U|psi> for a = 1.
double hadamard_test(const ZMat& u, const std::vector<cd>& psi, int a);

// One single-site Pauli term of an observable decomposition; site is 1-based.
struct PauliTerm {
  double coeff = 0.0;
  char axis = 'Z';
  int site = 1;
};

std::vector<PauliTerm> pauli_decompose(const Observable& obs);

// Plain-text gate list, one gate per line, layers separated by "---".
std::string circuit_text(const Circuit& c);

}  // namespace rhodyn
