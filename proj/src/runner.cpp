#include "rhodyn/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <utility>

#include "nlohmann/json.hpp"
#include "rhodyn/circuits.hpp"
#include "rhodyn/dmqmc.hpp"
#include "rhodyn/dynamics.hpp"
#include "rhodyn/exact.hpp"
#include "rhodyn/symmetry.hpp"
#include "rhodyn/truncation.hpp"
#include "rhodyn/util.hpp"

namespace rhodyn {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr int kMaxDenseL = 12;  // oracle capacity, mirrors the ED default

// Rethrows with the failing stage named, keeping the exception type so the
// CLI exit code still reflects the cause.
template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  auto tag = [name](const char* what) {
    return std::string("stage '") + name + "': " + what;
  };
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(tag(e.what()));
  } catch (const CapacityError& e) {
    throw CapacityError(tag(e.what()));
  } catch (const NumericalError& e) {
    throw NumericalError(tag(e.what()));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(tag(e.what()));
  }
}

// Tracks what this run has written so a failure can take its partial
// artifacts with it. Only files created here are ever removed.
class ArtifactDir {
 public:
  explicit ArtifactDir(const std::string& dir) : dir_(dir) {}

  void write(const std::string& name, const std::string& content) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    fs::path p = dir_ / name;
    {
      std::ofstream out(p, std::ios::binary | std::ios::trunc);
      if (!out) throw ConfigError("cannot write artifact '" + p.string() + "'");
      out << content;
      if (!out) throw ConfigError("write failed for artifact '" + p.string() + "'");
    }
    written_.push_back(p.string());
  }

  void discard() {
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    written_.clear();
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  fs::path dir_;
  std::vector<std::string> written_;
};

ojson manifest_base(const char* command, const ExperimentConfig& cfg) {
  ojson j;
  j["command"] = command;
  ojson block = ojson::object();
  for (const auto& [k, v] : effective_entries(cfg)) block[k] = v;
  j["config"] = block;
  return j;
}

// Remaining artifact names relative to the output directory, manifest last.
RunResult finish(ArtifactDir& dir, ojson manifest,
                 const std::vector<std::string>& names, std::string summary) {
  ojson arts = ojson::array();
  for (const auto& n : names) arts.push_back(n);
  manifest["artifacts"] = arts;
  dir.write("run_manifest.json", manifest.dump(2) + "\n");
  return RunResult{dir.written(), std::move(summary)};
}

struct SourcedRho {
  DensityMatrix rho;
  SampleStats stats;  // populated only for the dmqmc source
  bool sampled = false;
};

SourcedRho make_source(const ExperimentConfig& cfg) {
  SourcedRho out;
  out.sampled = cfg.source == RhoSource::DMQMC;
  if (out.sampled) {
    SampleResult sr = stage("source", [&] {
      return sample(cfg.model, cfg.beta, cfg.dmqmc.N_psip, cfg.dmqmc.N_loops,
                    cfg.dmqmc.delta_beta, cfg.seed);
    });
    out.stats = std::move(sr.stats);
    out.rho = stage("symmetrize", [&] {
      return symmetrize_rho(sr.rho, cfg.model);
    });
  } else {
    out.rho = stage("source", [&] {
      return thermal_density_matrix(cfg.model, cfg.beta);
    });
  }
  return out;
}

}  // namespace

RunResult run_quench(const ExperimentConfig& cfg) {
  ModelParams h1 = cfg.quench_params();
  std::vector<double> times = cfg.time_grid();

  SourcedRho src = make_source(cfg);
  TruncatedDensityMatrix trunc =
      stage("truncate", [&] { return truncate(src.rho, cfg.truncation); });
  OrbitPlan plan = stage("plan", [&] {
    return plan_simulations(trunc.index_set, cfg.observable, h1);
  });
  std::vector<ElementError> errs;
  if (src.sampled)
    errs = stage("errors", [&] {
      return element_error(src.stats, trunc.index_set);
    });
  TimeSeries series = stage("reconstruct", [&] {
    return reconstruct(trunc, plan, cfg.observable, h1, times, errs);
  });

  bool oracle = cfg.model.L <= kMaxDenseL;
  TimeSeries exact;
  double delta_w = 0.0;
  if (oracle) {
    exact = stage("oracle", [&] {
      DensityMatrix rho_ed = thermal_density_matrix(cfg.model, cfg.beta);
      return heisenberg_expectation(rho_ed, cfg.observable, h1, times);
    });
    delta_w = truncation_error(exact, series);
  }

  ArtifactDir dir(cfg.output);
  try {
    std::vector<std::string> names = {"series.csv", "truncation.json",
                                      "orbit_plan.json"};
    dir.write("series.csv", time_series_csv(series));
    dir.write("truncation.json", truncation_manifest_json(trunc));
    dir.write("orbit_plan.json", orbit_plan_json(plan));
    if (src.sampled) {
      dir.write("dmqmc.jsonl", dmqmc_jsonl(src.stats));
      names.push_back("dmqmc.jsonl");
    }
    if (oracle) {
      dir.write("oracle.csv", time_series_csv(exact));
      names.push_back("oracle.csv");
    }
    ojson j = manifest_base("quench", cfg);
    ojson sum;
    sum["N_w"] = trunc.N_w;
    sum["N_sim"] = plan.N_sim;
    sum["w"] = trunc.weight;
    if (oracle) sum["delta_w"] = delta_w;
    j["summary"] = sum;
    std::string line = "quench: N_w=" + std::to_string(trunc.N_w) +
                       " N_sim=" + std::to_string(plan.N_sim);
    if (oracle) line += " delta_w=" + round_trip(delta_w);
    return finish(dir, std::move(j), names, line);
  } catch (...) {
    dir.discard();
    throw;
  }
}

RunResult run_structure(const ExperimentConfig& cfg, const KeyValues& raw) {
  if (cfg.source != RhoSource::Exact)
    throw ConfigError("structure sweep requires thermal.source = ed");
  if (cfg.truncation.kind != TruncKind::Weight)
    throw ConfigError("structure sweep requires truncation.kind = weight");
  std::vector<double> g0s = get_double_list(raw, "structure.g0", {cfg.model.g});
  std::vector<double> betas = get_double_list(raw, "structure.beta", {cfg.beta});

  std::vector<SweepPoint> grid;
  for (double g0 : g0s)
    for (double beta : betas) {
      SweepPoint p;
      p.L = cfg.model.L;
      p.beta = beta;
      p.g0 = g0;
      p.h0 = cfg.model.h;
      p.basis = cfg.basis_auto ? default_basis_for(g0) : cfg.model.basis;
      grid.push_back(p);
    }
  std::vector<SweepRow> rows = stage("sweep", [&] {
    return sweep_Nw(grid, cfg.truncation.value, kMaxDenseL);
  });

  ArtifactDir dir(cfg.output);
  try {
    dir.write("structure.csv", sweep_csv(rows));
    std::int64_t failed = 0;
    for (const auto& r : rows) failed += r.failed ? 1 : 0;
    ojson j = manifest_base("structure", cfg);
    j["config"]["structure.g0"] = raw.count("structure.g0")
                                      ? raw.at("structure.g0")
                                      : round_trip(cfg.model.g);
    j["config"]["structure.beta"] = raw.count("structure.beta")
                                        ? raw.at("structure.beta")
                                        : round_trip(cfg.beta);
    ojson sum;
    sum["rows"] = static_cast<std::int64_t>(rows.size());
    sum["failed"] = failed;
    j["summary"] = sum;
    return finish(dir, std::move(j), {"structure.csv"},
                  "structure: rows=" + std::to_string(rows.size()) +
                      " failed=" + std::to_string(failed));
  } catch (...) {
    dir.discard();
    throw;
  }
}

RunResult run_dmqmc_sample(const ExperimentConfig& cfg) {
  if (cfg.source != RhoSource::DMQMC)
    throw ConfigError("dmqmc-sample requires thermal.source = dmqmc");
  SampleResult sr = stage("source", [&] {
    return sample(cfg.model, cfg.beta, cfg.dmqmc.N_psip, cfg.dmqmc.N_loops,
                  cfg.dmqmc.delta_beta, cfg.seed);
  });

  ArtifactDir dir(cfg.output);
  try {
    dir.write("dmqmc.jsonl", dmqmc_jsonl(sr.stats));
    ojson j = manifest_base("dmqmc-sample", cfg);
    ojson sum;
    sum["chi_diag"] = sr.stats.chi_diag;
    sum["loops_used"] = sr.stats.loops_used;
    sum["elements"] = static_cast<std::int64_t>(sr.stats.entries.size());
    j["summary"] = sum;
    return finish(dir, std::move(j), {"dmqmc.jsonl"},
                  "dmqmc-sample: elements=" +
                      std::to_string(sr.stats.entries.size()) +
                      " chi_diag=" + std::to_string(sr.stats.chi_diag));
  } catch (...) {
    dir.discard();
    throw;
  }
}

RunResult run_orbits(const ExperimentConfig& cfg) {
  ModelParams h1 = cfg.quench_params();
  SourcedRho src = make_source(cfg);
  TruncatedDensityMatrix trunc =
      stage("truncate", [&] { return truncate(src.rho, cfg.truncation); });
  OrbitPlan plan = stage("plan", [&] {
    return plan_simulations(trunc.index_set, cfg.observable, h1);
  });

  ArtifactDir dir(cfg.output);
  try {
    dir.write("orbit_plan.json", orbit_plan_json(plan));
    dir.write("truncation.json", truncation_manifest_json(trunc));
    ojson j = manifest_base("orbits", cfg);
    ojson sum;
    sum["N_w"] = trunc.N_w;
    sum["N_sim"] = plan.N_sim;
    sum["excluded"] = static_cast<std::int64_t>(plan.excluded.size());
    sum["reduction"] = plan.N_sim > 0
                           ? double(trunc.N_w) / double(plan.N_sim)
                           : 0.0;
    j["summary"] = sum;
    return finish(dir, std::move(j), {"orbit_plan.json", "truncation.json"},
                  "orbits: N_w=" + std::to_string(trunc.N_w) +
                      " N_sim=" + std::to_string(plan.N_sim));
  } catch (...) {
    dir.discard();
    throw;
  }
}

RunResult run_tde(const ExperimentConfig& cfg) {
  ModelParams h1 = cfg.quench_params();
  double value = stage("tde", [&] {
    return tde_average(cfg.model, h1, cfg.observable, cfg.beta, kMaxDenseL);
  });

  ArtifactDir dir(cfg.output);
  try {
    ojson t;
    t["observable"] = obs_name(cfg.observable.kind);
    t["beta"] = cfg.beta;
    t["g0"] = cfg.model.g;
    t["tde"] = value;
    dir.write("tde.json", t.dump(2) + "\n");
    ojson j = manifest_base("tde", cfg);
    ojson sum;
    sum["tde"] = value;
    j["summary"] = sum;
    return finish(dir, std::move(j), {"tde.json"},
                  "tde: value=" + round_trip(value));
  } catch (...) {
    dir.discard();
    throw;
  }
}

RunResult run_circuit(const KeyValues& raw) {
  static const std::set<std::string> allowed = {"circuit.n", "circuit.m",
                                                "circuit.variant", "output"};
  for (const auto& [key, val] : raw) {
    (void)val;
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' for the circuit command");
  }
  auto require = [&raw](const char* key) -> const std::string& {
    auto it = raw.find(key);
    if (it == raw.end())
      throw ConfigError(std::string("missing required key '") + key + "'");
    return it->second;
  };
  const std::string& out_dir = require("output");

  SuperpositionSpec spec;
  std::string variant = raw.count("circuit.variant")
                            ? raw.at("circuit.variant")
                            : std::string("psi_plus");
  Circuit c = stage("synthesize", [&] {
    spec.n = BasisState::from_ket(require("circuit.n"));
    spec.m = BasisState::from_ket(require("circuit.m"));
    spec.variant = variant_from_name(variant);
    return synthesize(spec);
  });

  // Replay the circuit on |0...0> and compare against the two target
  // amplitudes; past simulator capacity the circuit is emitted unverified.
  double max_dev = 0.0;
  bool verified = spec.n.L <= 20;
  if (verified) {
    stage("verify", [&] {
      std::vector<cd> state = simulate(c, 0);
      cd s = 0.0;
      switch (spec.variant) {
        case SupVariant::PsiPlus: s = {M_SQRT1_2, 0.0}; break;
        case SupVariant::PsiMinus: s = {-M_SQRT1_2, 0.0}; break;
        case SupVariant::PhiPlus: s = {0.0, M_SQRT1_2}; break;
        case SupVariant::PhiMinus: s = {0.0, -M_SQRT1_2}; break;
      }
      for (std::size_t i = 0; i < state.size(); ++i) {
        cd want = 0.0;
        if (i == spec.n.bits) want = {M_SQRT1_2, 0.0};
        if (i == spec.m.bits) want = s;
        max_dev = std::max(max_dev, std::abs(state[i] - want));
      }
      if (max_dev > 1e-12)
        throw NumericalError("synthesized amplitudes deviate by " +
                             round_trip(max_dev));
      return 0;
    });
  }

  ArtifactDir dir(out_dir);
  try {
    dir.write("circuit.txt", circuit_text(c));
    ojson j;
    j["command"] = "circuit";
    ojson block = ojson::object();
    block["circuit.m"] = spec.m.ket();
    block["circuit.n"] = spec.n.ket();
    block["circuit.variant"] = variant_name(spec.variant);
    block["output"] = out_dir;
    j["config"] = block;
    ojson sum;
    sum["qubits"] = spec.n.L;
    sum["gates"] = c.gate_count();
    sum["cnot_layers"] = c.cnot_layers();
    sum["verified"] = verified;
    if (verified) sum["max_amplitude_dev"] = max_dev;
    j["summary"] = sum;
    ojson arts = ojson::array();
    arts.push_back("circuit.txt");
    j["artifacts"] = arts;
    dir.write("run_manifest.json", j.dump(2) + "\n");
    return RunResult{dir.written(),
                     "circuit: gates=" + std::to_string(c.gate_count()) +
                         " cnot_layers=" + std::to_string(c.cnot_layers())};
  } catch (...) {
    dir.discard();
    throw;
  }
}

RunResult run_command(const std::string& command, const KeyValues& raw) {
  if (command == "circuit") return run_circuit(raw);
  std::set<std::string> extra;
  if (command == "structure") extra = {"structure.g0", "structure.beta"};
  if (command == "quench" || command == "structure" ||
      command == "dmqmc-sample" || command == "orbits" || command == "tde") {
    ExperimentConfig cfg = make_config(raw, extra);
    if (command == "quench") return run_quench(cfg);
    if (command == "structure") return run_structure(cfg, raw);
    if (command == "dmqmc-sample") return run_dmqmc_sample(cfg);
    if (command == "orbits") return run_orbits(cfg);
    return run_tde(cfg);
  }
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace rhodyn
