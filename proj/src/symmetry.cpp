#include "rhodyn/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "rhodyn/util.hpp"

namespace rhodyn {

namespace {

std::uint32_t rol_bits(std::uint32_t bits, int k, int L) {
  k %= L;
  if (k < 0) k += L;
  if (k == 0) return bits;
  const std::uint32_t mask = (std::uint32_t(1) << L) - 1u;
  return ((bits << k) | (bits >> (L - k))) & mask;
}

std::uint32_t reverse_bits(std::uint32_t bits, int L) {
  std::uint32_t out = 0;
  for (int j = 0; j < L; ++j) out |= ((bits >> j) & 1u) << (L - 1 - j);
  return out;
}

std::uint64_t fold_key(std::uint32_t m, std::uint32_t n) {
  if (m > n) std::swap(m, n);
  return (std::uint64_t(m) << 32) | n;
}

}  // namespace

std::uint32_t apply_bits(const SymmetryElement& g, std::uint32_t bits, int L) {
  if (L < 1 || L > 24) throw std::invalid_argument("apply_bits: L out of range");
  std::uint32_t x = rol_bits(bits, g.b, L);
  if (g.a & 1) x = reverse_bits(x, L);
  if (g.s & 1) x ^= (std::uint32_t(1) << L) - 1u;
  return x;
}

BasisState apply_element(const SymmetryElement& g, const BasisState& state) {
  BasisState out = state;
  out.bits = apply_bits(g, state.bits, state.L);
  return out;
}

int sign_of(const SymmetryElement& g, const Observable& obs) {
  if (g.s % 2 != 0)
    throw std::invalid_argument(
        "sign_of: spin flip is not a symmetry of the post-quench Hamiltonian");
  if (obs.kind == ObsKind::MagnetizationX) return 1;
  return (g.a + g.b) % 2 == 0 ? 1 : -1;
}

std::vector<SymmetryElement> initial_group(const ModelParams& h0) {
  h0.validate();
  std::vector<SymmetryElement> group;
  if (h0.h == 0.0) {
    // Spin flip anticommutes with every longitudinal field, reflection and
    // odd translations anticommute with the staggered one; combinations with
    // an even number of sign flips survive.
    for (int s = 0; s <= 1; ++s)
      for (int a = 0; a <= 1; ++a)
        for (int b = 0; b < h0.L; ++b)
          if ((s + a + b) % 2 == 0) group.push_back({s, a, b});
  } else {
    for (int b = 0; b < h0.L; b += 2) group.push_back({0, 0, b});
  }
  return group;
}

std::vector<SymmetryElement> quench_group(int L) {
  std::vector<SymmetryElement> group;
  for (int a = 0; a <= 1; ++a)
    for (int b = 0; b < L; ++b) group.push_back({0, a, b});
  return group;
}

DensityMatrix symmetrize_rho(const DensityMatrix& rho, const ModelParams& h0,
                             double drop_tol) {
  if (rho.basis != Basis::Z)
    throw ConfigError(
        "symmetrize_rho: lattice symmetries act on z-basis matrices only");
  if (rho.L != h0.L)
    throw std::invalid_argument("symmetrize_rho: rho and h0 disagree on L");
  if (!(drop_tol >= 0.0))
    throw std::invalid_argument("symmetrize_rho: drop_tol must be >= 0");

  const int L = rho.L;
  const auto group = initial_group(h0);
  const std::uint32_t mask = (std::uint32_t(1) << L) - 1u;

  bool need_rev = false;
  for (const auto& e : group) need_rev = need_rev || e.a;
  std::vector<std::uint32_t> rev;
  if (need_rev) {
    rev.resize(std::size_t(mask) + 1);
    for (std::uint32_t x = 0; x <= mask; ++x) rev[x] = reverse_bits(x, L);
  }
  auto img = [&](const SymmetryElement& e, std::uint32_t x) {
    std::uint32_t y = rol_bits(x, e.b, L);
    if (e.a) y = rev[y];
    if (e.s) y ^= mask;
    return y;
  };

  // Pass 1: accumulate the stored values of each orbit under its smallest
  // folded pair. Absent orbit members contribute zero.
  std::unordered_map<std::uint64_t, double> sums;
  sums.reserve(rho.entries.size() * 2);
  for (const auto& en : rho.entries) {
    std::uint64_t canon = ~std::uint64_t(0);
    for (const auto& e : group)
      canon = std::min(canon, fold_key(img(e, en.m), img(e, en.n)));
    sums[canon] += en.val;
  }

  // Pass 2: expand each orbit once and write the average to every member,
  // which makes the result invariant to the last bit.
  DensityMatrix out;
  out.L = rho.L;
  out.basis = rho.basis;
  out.source = rho.source;
  std::vector<std::uint64_t> members;
  for (const auto& [canon, sum] : sums) {
    const std::uint32_t cm = std::uint32_t(canon >> 32);
    const std::uint32_t cn = std::uint32_t(canon);
    members.clear();
    for (const auto& e : group)
      members.push_back(fold_key(img(e, cm), img(e, cn)));
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    const double avg = sum / double(members.size());
    if (std::abs(avg) <= drop_tol) continue;
    for (std::uint64_t k : members)
      out.entries.push_back({std::uint32_t(k >> 32), std::uint32_t(k), avg});
  }
  out.sort_entries();
  out.recompute_trace();
  return out;
}

const char* exclude_reason_name(ExcludeReason r) {
  return r == ExcludeReason::ElementZero ? "element_zero" : "real_part_zero";
}

OrbitPlan plan_simulations(const std::vector<RhoEntry>& index_set,
                           const Observable& obs, const ModelParams& h1) {
  h1.validate();
  if (obs.L != h1.L)
    throw std::invalid_argument(
        "plan_simulations: observable and Hamiltonian disagree on L");
  if (h1.h_s != 0.0)
    throw ConfigError(
        "plan_simulations: post-quench Hamiltonian must have h_s = 0; the "
        "dihedral group assumes a uniform chain");
  if (index_set.empty())
    throw std::invalid_argument("plan_simulations: empty index set");

  const int L = h1.L;
  const std::uint32_t mask = (std::uint32_t(1) << L) - 1u;
  for (const auto& e : index_set) {
    if (e.m > e.n)
      throw std::invalid_argument(
          "plan_simulations: index set must be folded with m <= n");
    if (e.n > mask)
      throw std::invalid_argument(
          "plan_simulations: state index out of range for L");
  }

  const auto group = quench_group(L);
  std::vector<int> gsign(group.size());
  for (std::size_t i = 0; i < group.size(); ++i)
    gsign[i] = sign_of(group[i], obs);
  std::vector<std::uint32_t> rev(std::size_t(mask) + 1);
  for (std::uint32_t x = 0; x <= mask; ++x) rev[x] = reverse_bits(x, L);

  std::vector<std::uint64_t> keys(index_set.size());
  for (std::size_t i = 0; i < index_set.size(); ++i)
    keys[i] = (std::uint64_t(index_set[i].m) << 32) | index_set[i].n;
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
    throw std::invalid_argument("plan_simulations: duplicate pair in index set");
  std::vector<char> done(keys.size(), 0);

  OrbitPlan plan;
  plan.obs = obs;
  plan.L = L;

  // Every matrix element of the evolved observable obeys two families of
  // relations: conjugation by a group element multiplies it by the element's
  // sign, and swapping the indices conjugates it. Walking the closure of one
  // pair labels each reachable ordered pair with +-S or +-S*, where S is the
  // value at the starting pair. Contradictory labels force S (or its real
  // part, the only piece a real symmetric density matrix picks up) to vanish.
  struct Labels {
    std::int8_t plain = 0;
    std::int8_t conj = 0;
  };
  std::unordered_map<std::uint64_t, Labels> lab;
  struct Ev {
    std::uint64_t key;
    int c;
    int sgn;
  };
  std::vector<Ev> queue;
  std::vector<std::uint64_t> folded;
  struct Retained {
    std::uint64_t key;
    int eta;
  };
  std::vector<Retained> retained;

  for (std::size_t i0 = 0; i0 < keys.size(); ++i0) {
    if (done[i0]) continue;
    lab.clear();
    queue.clear();
    bool elem_zero = false;
    bool re_zero = false;
    auto visit = [&](std::uint64_t key, int c, int sgn) {
      Labels& l = lab[key];
      std::int8_t& slot = c ? l.conj : l.plain;
      if (slot != 0) {
        if (slot != sgn) elem_zero = true;
        return;
      }
      slot = std::int8_t(sgn);
      const std::int8_t other = c ? l.plain : l.conj;
      if (other != 0 && other != sgn) re_zero = true;
      queue.push_back({key, c, sgn});
    };
    visit(keys[i0], 0, 1);
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const Ev ev = queue[qi];
      const std::uint32_t p = std::uint32_t(ev.key >> 32);
      const std::uint32_t q = std::uint32_t(ev.key);
      visit((std::uint64_t(q) << 32) | p, ev.c ^ 1, ev.sgn);
      for (std::size_t gi = 0; gi < group.size(); ++gi) {
        const auto& e = group[gi];
        std::uint32_t gp = rol_bits(p, e.b, L);
        std::uint32_t gq = rol_bits(q, e.b, L);
        if (e.a) {
          gp = rev[gp];
          gq = rev[gq];
        }
        visit((std::uint64_t(gp) << 32) | gq, ev.c, ev.sgn * gsign[gi]);
      }
    }

    folded.clear();
    for (const auto& [key, l] : lab) {
      (void)l;
      folded.push_back(fold_key(std::uint32_t(key >> 32), std::uint32_t(key)));
    }
    std::sort(folded.begin(), folded.end());
    folded.erase(std::unique(folded.begin(), folded.end()), folded.end());

    retained.clear();
    for (std::uint64_t k : folded) {
      const auto it = std::lower_bound(keys.begin(), keys.end(), k);
      if (it == keys.end() || *it != k) continue;
      done[std::size_t(it - keys.begin())] = 1;
      const Labels& l = lab.at(k);
      retained.push_back({k, l.plain != 0 ? l.plain : l.conj});
    }

    if (elem_zero || re_zero) {
      const ExcludeReason why =
          elem_zero ? ExcludeReason::ElementZero : ExcludeReason::RealPartZero;
      for (const auto& r : retained)
        plan.excluded.push_back(
            {std::uint32_t(r.key >> 32), std::uint32_t(r.key), why});
      continue;
    }

    const Retained& rep = retained.front();
    plan.representatives.emplace_back(std::uint32_t(rep.key >> 32),
                                      std::uint32_t(rep.key));
    for (const auto& r : retained)
      plan.expansion.push_back({std::uint32_t(r.key >> 32),
                                std::uint32_t(r.key),
                                std::uint32_t(rep.key >> 32),
                                std::uint32_t(rep.key), r.eta * rep.eta});
  }

  std::sort(plan.representatives.begin(), plan.representatives.end());
  std::sort(plan.expansion.begin(), plan.expansion.end(),
            [](const PlanEntry& x, const PlanEntry& y) {
              return std::make_pair(x.m, x.n) < std::make_pair(y.m, y.n);
            });
  std::sort(plan.excluded.begin(), plan.excluded.end(),
            [](const ExcludedPair& x, const ExcludedPair& y) {
              return std::make_pair(x.m, x.n) < std::make_pair(y.m, y.n);
            });
  plan.N_sim = std::int64_t(plan.representatives.size());
  return plan;
}

std::string orbit_plan_json(const OrbitPlan& plan) {
  nlohmann::json j;
  j["observable"] = obs_name(plan.obs.kind);
  j["L"] = plan.L;
  auto pair_arr = [](std::uint32_t m, std::uint32_t n) {
    return nlohmann::json::array({m, n});
  };
  auto reps = nlohmann::json::array();
  for (const auto& [m, n] : plan.representatives) reps.push_back(pair_arr(m, n));
  j["representatives"] = std::move(reps);
  auto exp = nlohmann::json::array();
  for (const auto& e : plan.expansion)
    exp.push_back({{"pair", pair_arr(e.m, e.n)},
                   {"rep", pair_arr(e.rep_m, e.rep_n)},
                   {"sign", e.sign}});
  j["expansion"] = std::move(exp);
  auto exc = nlohmann::json::array();
  for (const auto& e : plan.excluded)
    exc.push_back({{"pair", pair_arr(e.m, e.n)},
                   {"reason", exclude_reason_name(e.reason)}});
  j["excluded"] = std::move(exc);
  j["N_sim"] = plan.N_sim;
  return j.dump(2) + "\n";
}

}  // namespace rhodyn
