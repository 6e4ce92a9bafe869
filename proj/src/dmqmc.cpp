#include "rhodyn/dmqmc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <stdexcept>

#include "json.hpp"
#include "rhodyn/util.hpp"

namespace rhodyn {

namespace {

constexpr std::uint64_t kInitTag = 0x696E6974ull;  // remainder-placement stream

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct Splitmix {
  std::uint64_t s = 0;
  std::uint64_t next() {
    s += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double unit() { return double(next() >> 11) * 0x1.0p-53; }
};

std::uint64_t fold_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (std::uint64_t(a) << 32) | b;
}

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void refresh_totals(PsipPopulation& pop) {
  std::int64_t total = 0, diag = 0;
  for (const auto& [key, c] : pop.counts) {
    const auto m = std::uint32_t(key >> 32), n = std::uint32_t(key);
    if (m == n) {
      total += std::llabs(c);
      diag += c;
    } else {
      total += 2 * std::llabs(c);  // one stored count per orientation pair
    }
  }
  pop.total_psips = total;
  pop.diag_total = diag;
}

// Walkers of one element, emitted as (key, signed count) records. The RNG
// stream is fixed by (seed, step, key, ordinal), so the result does not
// depend on scheduling.
void process_element(std::uint64_t key, std::int64_t count, const SparseOp& H,
                     double half_db, double shift, std::uint64_t seed,
                     std::int64_t step_index,
                     std::vector<std::pair<std::uint64_t, std::int64_t>>& out) {
  const auto m = std::uint32_t(key >> 32), n = std::uint32_t(key);
  const bool diagonal = m == n;
  const std::int64_t units = std::llabs(count);
  const std::int64_t sgn = count > 0 ? 1 : -1;
  const double p_death = half_db * (H.diag[m] + H.diag[n] - 2.0 * shift);
  const std::uint64_t base = mix64(mix64(mix64(seed) ^ std::uint64_t(step_index)) ^ key);

  std::int64_t survivors = 0;
  for (std::int64_t u = 0; u < units; ++u) {
    Splitmix rng{mix64(base ^ std::uint64_t(u))};
    for (const auto& f : H.flips) {
      // A diagonal walker's left and right attempts toward the same folded
      // destination are one event; skipping the right loop keeps the first
      // moment of the symmetric count matrix exact.
      const std::uint32_t m2 = m ^ f.mask;
      if (rng.unit() < half_db * std::abs(f.amp)) {
        const std::int64_t mag = (!diagonal && m2 == n) ? 2 : 1;
        out.emplace_back(fold_key(m2, n), (f.amp > 0 ? -sgn : sgn) * mag);
      }
    }
    if (!diagonal) {
      for (const auto& f : H.flips) {
        const std::uint32_t n2 = n ^ f.mask;
        if (rng.unit() < half_db * std::abs(f.amp)) {
          const std::int64_t mag = n2 == m ? 2 : 1;
          out.emplace_back(fold_key(m, n2), (f.amp > 0 ? -sgn : sgn) * mag);
        }
      }
    }
    const bool hit = rng.unit() < std::abs(p_death);
    survivors += hit ? (p_death > 0.0 ? 0 : 2) : 1;
  }
  if (survivors != 0) out.emplace_back(key, sgn * survivors);
}

void annihilate(std::vector<std::pair<std::uint64_t, std::int64_t>>& records,
                std::vector<std::pair<std::uint64_t, std::int64_t>>& counts) {
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  counts.clear();
  std::size_t i = 0;
  while (i < records.size()) {
    const std::uint64_t key = records[i].first;
    std::int64_t sum = 0;
    for (; i < records.size() && records[i].first == key; ++i) sum += records[i].second;
    if (sum != 0) counts.emplace_back(key, sum);
  }
}

}  // namespace

std::int64_t PsipPopulation::chi_at(std::uint32_t m, std::uint32_t n) const {
  const std::uint64_t key = fold_key(m, n);
  const auto it = std::lower_bound(
      counts.begin(), counts.end(), key,
      [](const auto& e, std::uint64_t k) { return e.first < k; });
  return it != counts.end() && it->first == key ? it->second : 0;
}

const PsipStat* SampleStats::find(std::uint32_t m, std::uint32_t n) const {
  if (m > n) std::swap(m, n);
  const auto it = std::lower_bound(
      entries.begin(), entries.end(), std::make_pair(m, n),
      [](const PsipStat& e, const std::pair<std::uint32_t, std::uint32_t>& k) {
        return e.m != k.first ? e.m < k.first : e.n < k.second;
      });
  return it != entries.end() && it->m == m && it->n == n ? &*it : nullptr;
}

PsipPopulation init_population(int L, std::int64_t N_psip, Basis basis,
                               std::uint64_t seed) {
  if (L < 1 || L > 24) throw std::invalid_argument("init_population: L out of range");
  if (N_psip <= 0) throw std::invalid_argument("init_population: N_psip must be positive");
  const std::int64_t dim = std::int64_t(1) << L;
  if (N_psip < dim)
    std::cerr << "init_population: N_psip = " << N_psip << " is below 2^L = "
              << dim << "; diagonal coverage will be partial\n";

  PsipPopulation pop;
  pop.L = L;
  pop.basis = basis;
  pop.seed = seed;
  const std::int64_t base = N_psip / dim;
  std::int64_t rem = N_psip % dim;

  std::vector<std::int64_t> extra;
  if (rem > 0) {
    // Partial Fisher-Yates: the first `rem` slots of a seeded shuffle give
    // distinct diagonal indices.
    std::vector<std::int64_t> idx(static_cast<std::size_t>(dim));
    for (std::int64_t i = 0; i < dim; ++i) idx[std::size_t(i)] = i;
    Splitmix rng{mix64(mix64(seed) ^ kInitTag)};
    for (std::int64_t i = 0; i < rem; ++i) {
      const std::int64_t j = i + std::int64_t(rng.next() % std::uint64_t(dim - i));
      std::swap(idx[std::size_t(i)], idx[std::size_t(j)]);
    }
    extra.assign(idx.begin(), idx.begin() + rem);
    std::sort(extra.begin(), extra.end());
  }

  std::size_t e = 0;
  for (std::int64_t d = 0; d < dim; ++d) {
    std::int64_t c = base;
    if (e < extra.size() && extra[e] == d) {
      ++c;
      ++e;
    }
    if (c != 0)
      pop.counts.emplace_back((std::uint64_t(d) << 32) | std::uint64_t(d), c);
  }
  refresh_totals(pop);
  return pop;
}

PsipPopulation step(const PsipPopulation& pop, const ModelParams& h0, int threads) {
  h0.validate();
  if (h0.L != pop.L || h0.basis != pop.basis)
    throw std::invalid_argument("step: population and Hamiltonian disagree on L or basis");
  const SparseOp H = hamiltonian_op(h0);
  const double row = H.max_row_abs_sum();
  if (pop.delta_beta < 0.0)
    throw ConfigError("step: delta_beta must be nonnegative");
  if (pop.delta_beta * row >= 0.5)
    throw ConfigError("step: delta_beta * max row sum = " +
                      fmt_num(pop.delta_beta * row) +
                      " breaks the stability guard; delta_beta must stay below " +
                      fmt_num(0.5 / row));

  const double half_db = 0.5 * pop.delta_beta;
  const std::int64_t n_elems = std::int64_t(pop.counts.size());
  std::vector<std::pair<std::uint64_t, std::int64_t>> records;
  const int nthreads = resolve_threads(threads);
  if (nthreads <= 1 || n_elems <= 1) {
    records.reserve(pop.counts.size() * 2);
    for (const auto& [key, c] : pop.counts)
      process_element(key, c, H, half_db, pop.shift, pop.seed, pop.step_index, records);
  } else {
    std::vector<std::vector<std::pair<std::uint64_t, std::int64_t>>> emits(
        static_cast<std::size_t>(n_elems));
    parallel_for(n_elems, nthreads, [&](std::int64_t i) {
      const auto& [key, c] = pop.counts[std::size_t(i)];
      process_element(key, c, H, half_db, pop.shift, pop.seed, pop.step_index,
                      emits[std::size_t(i)]);
    });
    std::size_t total = 0;
    for (const auto& v : emits) total += v.size();
    records.reserve(total);
    for (const auto& v : emits) records.insert(records.end(), v.begin(), v.end());
  }

  PsipPopulation next = pop;
  annihilate(records, next.counts);
  next.step_index = pop.step_index + 1;
  next.beta_current = double(next.step_index) * pop.delta_beta;
  refresh_totals(next);
  return next;
}

SampleResult sample(const ModelParams& h0, double beta_target,
                    std::int64_t N_psip, int N_loops, double delta_beta,
                    std::uint64_t seed, int threads, double ceiling_factor) {
  h0.validate();
  if (N_loops < 1) throw std::invalid_argument("sample: N_loops must be positive");
  if (N_psip <= 0) throw std::invalid_argument("sample: N_psip must be positive");
  if (beta_target < 0.0) throw std::invalid_argument("sample: beta_target must be >= 0");
  if (delta_beta <= 0.0) throw std::invalid_argument("sample: delta_beta must be positive");
  const auto n_beta = std::int64_t(std::llround(beta_target / delta_beta));
  if (std::abs(double(n_beta) * delta_beta - beta_target) >
      1e-9 * std::max(1.0, std::abs(beta_target)))
    throw std::invalid_argument(
        "sample: beta_target must be an integer multiple of delta_beta");

  SampleResult out;
  out.stats.L = h0.L;
  out.stats.basis = h0.basis;
  out.stats.beta = beta_target;
  out.stats.N_psip = N_psip;
  out.stats.N_loops = N_loops;
  out.stats.delta_beta = delta_beta;
  out.stats.seed = seed;

  std::vector<std::pair<std::uint64_t, std::int64_t>> chi_pool;  // (key, chi)
  std::vector<std::pair<std::uint64_t, std::int64_t>> n_pool;    // (key, N)
  std::int64_t chi_diag = 0;
  int used = 0;

  const double ceiling = ceiling_factor * double(N_psip);
  for (int loop = 0; loop < N_loops; ++loop) {
    PsipPopulation pop =
        init_population(h0.L, N_psip, h0.basis, mix64(mix64(seed) ^ std::uint64_t(loop + 1)));
    pop.loop_index = loop;
    pop.delta_beta = delta_beta;
    for (std::int64_t s = 0; s < n_beta; ++s) {
      const std::int64_t before = pop.total_psips;
      pop = step(pop, h0, threads);
      if (double(pop.total_psips) > ceiling && before > 0 && pop.total_psips > 0)
        pop.shift -= 0.1 / delta_beta * std::log(double(pop.total_psips) / double(before));
      else
        pop.shift = 0.0;
    }
    if (pop.diag_total == 0) {
      std::cerr << "sample: loop " << loop << " ended with chi_diag = 0; discarded\n";
      continue;
    }
    ++used;
    chi_diag += pop.diag_total;
    for (const auto& [key, c] : pop.counts) {
      chi_pool.emplace_back(key, c);
      n_pool.emplace_back(key, std::llabs(c));
    }
  }
  if (used == 0)
    throw NumericalError("sample: every loop lost its diagonal population");
  out.stats.loops_used = used;
  out.stats.chi_diag = chi_diag;

  std::vector<std::pair<std::uint64_t, std::int64_t>> chi, num;
  annihilate(chi_pool, chi);
  annihilate(n_pool, num);
  out.stats.entries.reserve(num.size());
  std::size_t ci = 0;
  for (const auto& [key, nval] : num) {
    while (ci < chi.size() && chi[ci].first < key) ++ci;
    const std::int64_t cval = ci < chi.size() && chi[ci].first == key ? chi[ci].second : 0;
    out.stats.entries.push_back(
        {std::uint32_t(key >> 32), std::uint32_t(key), cval, nval});
  }

  out.rho.L = h0.L;
  out.rho.basis = h0.basis;
  out.rho.source = RhoSource::DMQMC;
  if (n_beta == 0) {
    // No steps taken: the initial condition is the identity, exactly.
    const std::uint32_t dim = 1u << h0.L;
    out.rho.entries.reserve(dim);
    for (std::uint32_t d = 0; d < dim; ++d)
      out.rho.entries.push_back({d, d, 1.0 / double(dim)});
  } else {
    out.rho.entries.reserve(out.stats.entries.size());
    for (const auto& e : out.stats.entries)
      if (e.chi != 0)
        out.rho.entries.push_back({e.m, e.n, double(e.chi) / double(chi_diag)});
  }
  out.rho.sort_entries();
  out.rho.recompute_trace();
  return out;
}

std::vector<ElementError> element_error(const SampleStats& stats,
                                        const std::vector<RhoEntry>& index_set) {
  if (index_set.empty())
    throw std::invalid_argument("element_error: empty index set");
  std::int64_t chi_dw = 0, n_dw = 0;
  for (const auto& e : index_set) {
    if (e.m > e.n)
      throw std::invalid_argument("element_error: index set must be folded with m <= n");
    if (e.m == e.n) {
      if (const PsipStat* s = stats.find(e.m, e.n)) {
        chi_dw += s->chi;
        n_dw += s->N;
      }
    }
  }
  if (chi_dw == 0)
    throw NumericalError(
        "element_error: chi_diag over the index set is zero; errors are undefined");

  const double cd = double(chi_dw);
  std::vector<ElementError> out;
  out.reserve(index_set.size());
  for (const auto& e : index_set) {
    const PsipStat* s = stats.find(e.m, e.n);
    const double N = s ? double(s->N) : 0.0;
    double delta = 0.0;
    if (N > 0.0) {
      double arg;
      if (e.m == e.n) {
        const double chi = double(s->chi);
        arg = 1.0 - 2.0 * chi / cd + N * double(n_dw) / (cd * cd);
      } else {
        arg = 1.0 + N * double(n_dw) / (cd * cd);
      }
      delta = std::sqrt(N) / std::abs(cd) * std::sqrt(std::max(0.0, arg));
    }
    out.push_back({e.m, e.n, delta});
  }
  std::sort(out.begin(), out.end(), [](const ElementError& a, const ElementError& b) {
    return a.m != b.m ? a.m < b.m : a.n < b.n;
  });
  return out;
}

std::string dmqmc_jsonl(const SampleStats& stats) {
  nlohmann::ordered_json header;
  header["L"] = stats.L;
  header["basis"] = basis_name(stats.basis);
  header["beta"] = stats.beta;
  header["N_psip"] = stats.N_psip;
  header["N_loops"] = stats.N_loops;
  header["delta_beta"] = stats.delta_beta;
  header["seed"] = stats.seed;
  header["chi_diag"] = stats.chi_diag;
  std::string out = header.dump() + "\n";

  std::vector<RhoEntry> set;
  set.reserve(stats.entries.size());
  for (const auto& e : stats.entries) set.push_back({e.m, e.n, 0.0});
  const auto deltas = element_error(stats, set);
  for (std::size_t i = 0; i < stats.entries.size(); ++i) {
    const auto& e = stats.entries[i];
    nlohmann::ordered_json rec;
    rec["m"] = e.m;
    rec["n"] = e.n;
    rec["chi"] = e.chi;
    rec["N"] = e.N;
    rec["Delta"] = deltas[i].delta;
    out += rec.dump() + "\n";
  }
  return out;
}

}  // namespace rhodyn
