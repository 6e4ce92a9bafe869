#include "rhodyn/circuits.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace rhodyn {

namespace {

constexpr int kMaxQubits = 20;

void gate_qubits(const Gate& g, int num_qubits, std::vector<int>& out) {
  out.clear();
  switch (g.kind) {
    case GateKind::H:
    case GateKind::X:
    case GateKind::S:
      out.push_back(g.target);
      break;
    case GateKind::CNOT:
      out.push_back(g.control);
      out.push_back(g.target);
      break;
    case GateKind::ControlledUnitary:
      for (int q = 0; q < num_qubits; ++q) out.push_back(q);
      break;
  }
}

void apply_gate(const Gate& g, std::vector<cd>& v) {
  const std::size_t dim = v.size();
  switch (g.kind) {
    case GateKind::H: {
      const std::size_t mask = std::size_t(1) << g.target;
      for (std::size_t i = 0; i < dim; ++i)
        if (!(i & mask)) {
          const cd a = v[i], b = v[i | mask];
          v[i] = (a + b) * M_SQRT1_2;
          v[i | mask] = (a - b) * M_SQRT1_2;
        }
      break;
    }
    case GateKind::X: {
      const std::size_t mask = std::size_t(1) << g.target;
      for (std::size_t i = 0; i < dim; ++i)
        if (!(i & mask)) std::swap(v[i], v[i | mask]);
      break;
    }
    case GateKind::S: {
      const std::size_t mask = std::size_t(1) << g.target;
      for (std::size_t i = 0; i < dim; ++i)
        if (i & mask) v[i] = cd(-v[i].imag(), v[i].real());
      break;
    }
    case GateKind::CNOT: {
      const std::size_t cm = std::size_t(1) << g.control;
      const std::size_t tm = std::size_t(1) << g.target;
      for (std::size_t i = 0; i < dim; ++i)
        if ((i & cm) && !(i & tm)) std::swap(v[i], v[i | tm]);
      break;
    }
    case GateKind::ControlledUnitary: {
      const std::size_t dsys = dim >> 1;
      if (!g.u || g.u->n != std::int64_t(dsys))
        throw std::invalid_argument(
            "simulate: controlled-unitary payload has the wrong dimension");
      const std::size_t cm = std::size_t(1) << g.control;
      const std::size_t low = cm - 1;
      std::vector<cd> x(dsys), y(dsys, cd{});
      for (std::size_t j = 0; j < dsys; ++j)
        x[j] = v[((j & ~low) << 1) | cm | (j & low)];
      const ZMat& u = *g.u;
      for (std::size_t j = 0; j < dsys; ++j) {
        const cd xj = x[j];
        const cd* col = u.a.data() + j * dsys;
        for (std::size_t i = 0; i < dsys; ++i) y[i] += col[i] * xj;
      }
      for (std::size_t j = 0; j < dsys; ++j)
        v[((j & ~low) << 1) | cm | (j & low)] = y[j];
      break;
    }
  }
}

}  // namespace

void Circuit::validate() const {
  if (num_qubits < 1)
    throw std::invalid_argument("Circuit: register size out of range");
  std::vector<int> qs;
  std::vector<char> used(static_cast<std::size_t>(num_qubits));
  for (const auto& layer : layers) {
    std::fill(used.begin(), used.end(), 0);
    for (const Gate& g : layer) {
      if (g.kind == GateKind::CNOT && g.control == g.target)
        throw std::invalid_argument("Circuit: CNOT control equals target");
      gate_qubits(g, num_qubits, qs);
      for (int q : qs) {
        if (q < 0 || q >= num_qubits)
          throw std::invalid_argument("Circuit: qubit index out of range");
        if (used[std::size_t(q)])
          throw std::invalid_argument("Circuit: layer reuses a qubit");
        used[std::size_t(q)] = 1;
      }
    }
  }
}

std::vector<Gate> Circuit::gates() const {
  std::vector<Gate> out;
  for (const auto& layer : layers) out.insert(out.end(), layer.begin(), layer.end());
  return out;
}

int Circuit::cnot_layers() const {
  int n = 0;
  for (const auto& layer : layers)
    for (const Gate& g : layer)
      if (g.kind == GateKind::CNOT) {
        ++n;
        break;
      }
  return n;
}

std::int64_t Circuit::gate_count() const {
  std::int64_t n = 0;
  for (const auto& layer : layers) n += std::int64_t(layer.size());
  return n;
}

const char* variant_name(SupVariant v) {
  switch (v) {
    case SupVariant::PsiPlus: return "psi_plus";
    case SupVariant::PsiMinus: return "psi_minus";
    case SupVariant::PhiPlus: return "phi_plus";
    case SupVariant::PhiMinus: return "phi_minus";
  }
  return "?";
}

SupVariant variant_from_name(const std::string& s) {
  if (s == "psi_plus") return SupVariant::PsiPlus;
  if (s == "psi_minus") return SupVariant::PsiMinus;
  if (s == "phi_plus") return SupVariant::PhiPlus;
  if (s == "phi_minus") return SupVariant::PhiMinus;
  throw std::invalid_argument("unknown superposition variant: " + s);
}

Circuit synthesize(const SuperpositionSpec& spec) {
  const int L = spec.n.L;
  if (L < 1 || L > 32)
    throw std::invalid_argument("synthesize: register size out of range");
  if (spec.m.L != L)
    throw std::invalid_argument("synthesize: states live on different registers");
  const std::uint32_t top = (L == 32) ? 0xFFFFFFFFu : ((std::uint32_t(1) << L) - 1);
  if (spec.n.bits > top || spec.m.bits > top)
    throw std::invalid_argument("synthesize: basis state out of range");
  if (spec.n.bits == spec.m.bits)
    throw std::invalid_argument("synthesize: degenerate spec, states coincide");

  const std::uint32_t diff = spec.n.bits ^ spec.m.bits;
  const int pivot = std::countr_zero(diff);
  const bool minus =
      spec.variant == SupVariant::PsiMinus || spec.variant == SupVariant::PhiMinus;
  const bool phi =
      spec.variant == SupVariant::PhiPlus || spec.variant == SupVariant::PhiMinus;

  Circuit c;
  c.num_qubits = L;
  if (minus) c.layers.push_back({Gate{GateKind::X, pivot}});
  c.layers.push_back({Gate{GateKind::H, pivot}});
  if (phi) c.layers.push_back({Gate{GateKind::S, pivot}});

  // Balanced fan-out: every already-entangled qubit feeds one new target per
  // layer, so the entangled set doubles and the depth is ceil(log2 |S|).
  std::vector<int> copied = {pivot}, pending;
  for (int q = 0; q < L; ++q)
    if ((diff >> q) & 1u && q != pivot) pending.push_back(q);
  std::size_t next = 0;
  while (next < pending.size()) {
    std::vector<Gate> layer;
    const std::size_t sources = copied.size();
    for (std::size_t s = 0; s < sources && next < pending.size(); ++s, ++next) {
      layer.push_back(Gate{GateKind::CNOT, pending[next], copied[s]});
      copied.push_back(pending[next]);
    }
    c.layers.push_back(std::move(layer));
  }

  // Pattern layer: with X on every set bit of n, the fan-out branch that kept
  // the pivot at 0 becomes |n> and the flipped branch becomes |m>.
  std::vector<Gate> pattern;
  for (int q = 0; q < L; ++q)
    if ((spec.n.bits >> q) & 1u) pattern.push_back(Gate{GateKind::X, q});
  if (!pattern.empty()) c.layers.push_back(std::move(pattern));

  c.validate();
  return c;
}

std::vector<cd> simulate(const Circuit& c, std::uint64_t initial) {
  if (c.num_qubits > kMaxQubits)
    throw CapacityError("simulate: statevector register capped at 20 qubits");
  c.validate();
  const std::size_t dim = std::size_t(1) << c.num_qubits;
  if (initial >= dim)
    throw std::invalid_argument("simulate: initial basis index out of range");

  std::vector<cd> v(dim, cd{});
  v[initial] = 1.0;
  bool has_cu = false;
  for (const auto& layer : c.layers)
    for (const Gate& g : layer) {
      apply_gate(g, v);
      has_cu = has_cu || g.kind == GateKind::ControlledUnitary;
    }

  double nrm2 = 0.0;
  for (const cd& z : v) nrm2 += std::norm(z);
  if (std::abs(std::sqrt(nrm2) - 1.0) > (has_cu ? 1e-9 : 1e-12))
    throw NumericalError("simulate: state norm drifted from 1");
  return v;
}

std::vector<cd> matrix_element_from_expectations(const TimeSeries& psi_plus,
                                                 const TimeSeries& psi_minus,
                                                 const TimeSeries& phi_plus,
                                                 const TimeSeries& phi_minus) {
  const std::vector<double>& t = psi_plus.times;
  if (t.empty()) throw std::invalid_argument(
      "matrix_element_from_expectations: empty time grid");
  for (const TimeSeries* s : {&psi_plus, &psi_minus, &phi_plus, &phi_minus}) {
    if (s->times != t)
      throw std::invalid_argument(
          "matrix_element_from_expectations: series on mismatched time grids");
    if (s->values.size() != t.size())
      throw std::invalid_argument(
          "matrix_element_from_expectations: series length mismatch");
  }
  std::vector<cd> out(t.size());
  for (std::size_t k = 0; k < t.size(); ++k)
    out[k] = cd(0.5 * (psi_plus.values[k] - psi_minus.values[k]),
                0.5 * (phi_minus.values[k] - phi_plus.values[k]));
  return out;
}

double hadamard_test(const ZMat& u, const std::vector<cd>& psi, int a) {
  if (a != 0 && a != 1)
    throw std::invalid_argument("hadamard_test: phase power must be 0 or 1");
  const std::int64_t n = u.n;
  if (n < 2 || (n & (n - 1)) != 0 || std::size_t(n) != psi.size())
    throw std::invalid_argument(
        "hadamard_test: unitary and state dimensions are not a shared 2^L");
  const int L = std::countr_zero(std::uint64_t(n));
  if (L + 1 > kMaxQubits)
    throw CapacityError("hadamard_test: ancilla register exceeds 20 qubits");

  // Unitarity gate: Frobenius norm of U^dag U - 1.
  double dev2 = 0.0;
  for (std::int64_t j = 0; j < n; ++j)
    for (std::int64_t i = 0; i <= j; ++i) {
      cd acc = 0.0;
      for (std::int64_t k = 0; k < n; ++k)
        acc += std::conj(u.at(k, i)) * u.at(k, j);
      if (i == j) acc -= 1.0;
      dev2 += (i == j ? 1.0 : 2.0) * std::norm(acc);
    }
  if (std::sqrt(dev2) > 1e-10)
    throw std::invalid_argument("hadamard_test: input matrix is not unitary");

  double pnorm2 = 0.0;
  for (const cd& z : psi) pnorm2 += std::norm(z);
  if (std::abs(std::sqrt(pnorm2) - 1.0) > 1e-9)
    throw std::invalid_argument("hadamard_test: state is not normalized");

  const int anc = L;
  Circuit c;
  c.num_qubits = L + 1;
  c.layers.push_back({Gate{GateKind::H, anc}});
  c.layers.push_back(
      {Gate{GateKind::ControlledUnitary, 0, anc, std::make_shared<ZMat>(u)}});
  // S^3 = S-dagger on the ancilla turns the kickback so the final <Z> reads
  // +Im rather than -Im.
  for (int k = 0; k < 3 * a; ++k)
    c.layers.push_back({Gate{GateKind::S, anc}});
  c.layers.push_back({Gate{GateKind::H, anc}});
  c.validate();

  std::vector<cd> v(std::size_t(2) * n, cd{});
  std::copy(psi.begin(), psi.end(), v.begin());
  for (const auto& layer : c.layers)
    for (const Gate& g : layer) apply_gate(g, v);

  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    z += (i < std::size_t(n) ? 1.0 : -1.0) * std::norm(v[i]);
  return z;
}

std::vector<PauliTerm> pauli_decompose(const Observable& obs) {
  if (obs.L < 1) throw std::invalid_argument("pauli_decompose: empty chain");
  std::vector<PauliTerm> terms;
  terms.reserve(std::size_t(obs.L));
  for (int site = 1; site <= obs.L; ++site) {
    PauliTerm t;
    t.site = site;
    switch (obs.kind) {
      case ObsKind::StaggeredMagnetizationZ:
        t.axis = 'Z';
        t.coeff = ((site & 1) ? -1.0 : 1.0) / obs.L;
        break;
      case ObsKind::MagnetizationX:
        t.axis = 'X';
        t.coeff = 1.0 / obs.L;
        break;
    }
    terms.push_back(t);
  }
  return terms;
}

std::string circuit_text(const Circuit& c) {
  std::string out;
  for (std::size_t li = 0; li < c.layers.size(); ++li) {
    if (li > 0) out += "---\n";
    for (const Gate& g : c.layers[li]) {
      switch (g.kind) {
        case GateKind::H: out += "H " + std::to_string(g.target); break;
        case GateKind::X: out += "X " + std::to_string(g.target); break;
        case GateKind::S: out += "S " + std::to_string(g.target); break;
        case GateKind::CNOT:
          out += "CNOT " + std::to_string(g.control) + "," +
                 std::to_string(g.target);
          break;
        case GateKind::ControlledUnitary:
          out += "CU " + std::to_string(g.control);
          break;
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace rhodyn
