#pragma once

// Experiment configuration: a flat key=value file with dotted section names
// is resolved into one effective parameter set. Every default is applied
// here, so the effective entries embedded in a run manifest are sufficient
// to replay the run.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rhodyn/exact.hpp"
#include "rhodyn/model.hpp"
#include "rhodyn/truncation.hpp"

namespace rhodyn {

// Raw file content: trimmed keys and values, comments stripped, duplicates
// rejected. Values keep their textual form; lists stay comma separated.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues load_key_values(const std::string& path);

struct DmqmcConfig {
  std::int64_t N_psip = 0;
  int N_loops = 10;
  double delta_beta = 0.01;
};

struct ExperimentConfig {
  ModelParams model;  // pre-quench Hamiltonian, basis already resolved
  bool basis_auto = true;
  double quench_g = 1.0;
  double quench_h = 1.0;
  double beta = 1.0;
  RhoSource source = RhoSource::Exact;  // Exact or DMQMC
  DmqmcConfig dmqmc;
  TruncTarget truncation = TruncTarget::weight(1.0);
  Observable observable;
  double t_max = 10.0;
  int points = 201;
  std::uint64_t seed = 1;
  std::string output;

  // Post-quench Hamiltonian: same lattice, uniform fields (g, h), no
  // staggered term.
  ModelParams quench_params() const;
  std::vector<double> time_grid() const;
};

// Resolve a raw map into an effective config. Required keys: model.L,
// model.g0, thermal.beta, output, and dmqmc.N_psip when thermal.source is
// dmqmc. Defaults: model.J 1, model.h0 0, model.h_s 1/L, model.basis auto
// (z for g0 <= 1, x above), quench.g/h 1, thermal.source ed, dmqmc.N_loops
// 10, dmqmc.delta_beta 0.01, truncation weight 1, observable by basis,
// grid.t_max 10, grid.points 201, seed 1. Keys outside the known set plus
// `extra_allowed` are rejected.
ExperimentConfig make_config(const KeyValues& raw,
                             const std::set<std::string>& extra_allowed = {});

// Every effective parameter as sorted (key, value) pairs, dmqmc block
// included only when the source is dmqmc.
std::vector<std::pair<std::string, std::string>> effective_entries(
    const ExperimentConfig& c);

// Typed readers over a raw map; every failure names the key.
double get_double(const KeyValues& kv, const std::string& key, double fallback);
std::int64_t get_int(const KeyValues& kv, const std::string& key,
                     std::int64_t fallback);
std::vector<double> get_double_list(const KeyValues& kv, const std::string& key,
                                    const std::vector<double>& fallback);

}  // namespace rhodyn
