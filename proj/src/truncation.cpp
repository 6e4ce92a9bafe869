#include "rhodyn/truncation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"
#include "rhodyn/util.hpp"

namespace rhodyn {

namespace {

// Compensated accumulation keeps prefix weights monotone even over millions
// of near-equal masses.
struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
};

double entry_mass(const RhoEntry& e) {
  double m = e.val * e.val;
  return e.m == e.n ? m : 2.0 * m;
}

std::int64_t entry_pairs(const RhoEntry& e) { return e.m == e.n ? 1 : 2; }

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

TruncatedDensityMatrix truncate(const DensityMatrix& rho, const TruncTarget& target) {
  if (rho.entries.empty()) throw std::invalid_argument("truncate: empty density matrix");

  std::vector<RhoEntry> sorted = rho.entries;
  std::sort(sorted.begin(), sorted.end(), [](const RhoEntry& a, const RhoEntry& b) {
    double ma = std::fabs(a.val), mb = std::fabs(b.val);
    if (ma != mb) return ma > mb;
    if (a.m != b.m) return a.m < b.m;
    return a.n < b.n;
  });

  // Total mass accumulated in the sorted order, so a full prefix reproduces
  // it bit for bit and full retention reports weight exactly 1.
  KahanSum total;
  for (const auto& e : sorted) total.add(entry_mass(e));
  if (!(total.s > 0.0))
    throw NumericalError("truncate: density matrix has zero Frobenius mass");

  std::size_t keep = 0;
  switch (target.kind) {
    case TruncKind::Weight: {
      if (target.value > 1.0)
        throw ConfigError("truncate: weight target " + fmt_num(target.value) +
                          " exceeds 1, the weight of the untruncated matrix");
      if (!(target.value > 0.0))
        throw ConfigError("truncate: weight target must lie in (0, 1]");
      KahanSum prefix;
      while (keep < sorted.size()) {
        prefix.add(entry_mass(sorted[keep]));
        ++keep;
        if (std::sqrt(prefix.s / total.s) >= target.value) break;
      }
      break;
    }
    case TruncKind::Count: {
      if (target.count < 0)
        throw ConfigError("truncate: element budget must be nonnegative");
      std::int64_t used = 0;
      while (keep < sorted.size()) {
        std::int64_t cost = entry_pairs(sorted[keep]);
        if (used + cost > target.count) break;
        used += cost;
        ++keep;
      }
      break;
    }
    case TruncKind::Cutoff: {
      while (keep < sorted.size() && std::fabs(sorted[keep].val) > target.value) ++keep;
      break;
    }
  }

  KahanSum kept;
  std::int64_t pairs = 0;
  KahanSum tr;
  for (std::size_t i = 0; i < keep; ++i) {
    kept.add(entry_mass(sorted[i]));
    pairs += entry_pairs(sorted[i]);
    if (sorted[i].m == sorted[i].n) tr.add(sorted[i].val);
  }
  if (std::fabs(tr.s) < 1e-12)
    throw NumericalError(
        "truncate: retained trace below 1e-12; the selection is almost "
        "entirely off-diagonal and cannot be renormalized");

  TruncatedDensityMatrix out;
  out.weight = std::sqrt(kept.s / total.s);
  out.N_w = pairs;
  out.cutoff = target.kind == TruncKind::Cutoff
                   ? target.value
                   : (keep < sorted.size() ? std::fabs(sorted[keep].val) : 0.0);
  out.index_set.assign(sorted.begin(), sorted.begin() + keep);
  for (auto& e : out.index_set) e.val /= tr.s;

  out.rho_w.L = rho.L;
  out.rho_w.basis = rho.basis;
  out.rho_w.source = RhoSource::Truncated;
  out.rho_w.entries = out.index_set;
  out.rho_w.sort_entries();
  out.rho_w.recompute_trace();
  return out;
}

double weight_of(const DensityMatrix& rho_subset, const DensityMatrix& rho) {
  if (rho.entries.empty())
    throw std::invalid_argument("weight_of: empty reference density matrix");

  auto key_less = [](const RhoEntry& e, std::pair<std::uint32_t, std::uint32_t> k) {
    return e.m != k.first ? e.m < k.first : e.n < k.second;
  };
  for (const auto& e : rho_subset.entries) {
    auto it = std::lower_bound(rho.entries.begin(), rho.entries.end(),
                               std::make_pair(e.m, e.n), key_less);
    if (it == rho.entries.end() || it->m != e.m || it->n != e.n)
      throw std::invalid_argument(
          "weight_of: subset support is not contained in the reference matrix");
  }

  KahanSum num, den;
  for (const auto& e : rho_subset.entries) num.add(entry_mass(e));
  for (const auto& e : rho.entries) den.add(entry_mass(e));
  if (!(den.s > 0.0))
    throw std::invalid_argument("weight_of: reference matrix has zero Frobenius mass");
  return std::sqrt(num.s / den.s);
}

std::vector<SweepRow> sweep_Nw(const std::vector<SweepPoint>& grid, double w_target,
                               int max_dense_L, int threads) {
  std::vector<SweepRow> rows(grid.size());
  int workers = resolve_threads(threads);
  parallel_for(static_cast<std::int64_t>(grid.size()), workers, [&](std::int64_t i) {
    const SweepPoint& pt = grid[i];
    SweepRow& row = rows[i];
    row.point = pt;
    row.w_target = w_target;
    try {
      ModelParams p;
      p.L = pt.L;
      p.J = 1.0;
      p.g = pt.g0;
      p.h = pt.h0;
      p.h_s = 1.0 / pt.L;
      p.basis = pt.basis;
      DensityMatrix rho = thermal_density_matrix(p, pt.beta, 1e-16, max_dense_L);
      TruncatedDensityMatrix t = truncate(rho, TruncTarget::weight(w_target));
      row.N_w = t.N_w;
      row.achieved_w = t.weight;
    } catch (const CapacityError& e) {
      row.failed = true;
      row.error = e.what();
    }
  });
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "L,beta,g0,h0,basis,w_target,N_w,achieved_w\n";
  for (const auto& r : rows) {
    out += std::to_string(r.point.L);
    out += ',';
    out += round_trip(r.point.beta);
    out += ',';
    out += round_trip(r.point.g0);
    out += ',';
    out += round_trip(r.point.h0);
    out += ',';
    out += basis_name(r.point.basis);
    out += ',';
    out += round_trip(r.w_target);
    out += ',';
    if (!r.failed) {
      out += std::to_string(r.N_w);
      out += ',';
      out += round_trip(r.achieved_w);
    } else {
      out += ',';
    }
    out += '\n';
  }
  return out;
}

std::string truncation_manifest_json(const TruncatedDensityMatrix& t) {
  nlohmann::json j;
  j["epsilon"] = t.cutoff;
  j["w"] = t.weight;
  j["N_w"] = t.N_w;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : t.index_set)
    arr.push_back({{"m", e.m}, {"n", e.n}, {"value", e.val}});
  j["retained"] = std::move(arr);
  return j.dump(2) + "\n";
}

}  // namespace rhodyn
