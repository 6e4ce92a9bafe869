#pragma once

// Command drivers behind the CLI front-end. Each driver executes one
// pipeline and writes its artifact set into the config's output directory;
// the run manifest written last embeds every effective parameter, so a run
// can be replayed from its artifacts alone. On failure the partially
// written files are removed and the error is rethrown with the failing
// stage named, preserving the exception type.

#include <string>
#include <vector>

#include "rhodyn/config.hpp"

namespace rhodyn {

struct RunResult {
  std::vector<std::string> artifacts;  // absolute or cwd-relative paths, in write order
  std::string summary;                 // one line for stdout
};

RunResult run_quench(const ExperimentConfig& cfg);
RunResult run_structure(const ExperimentConfig& cfg, const KeyValues& raw);
RunResult run_dmqmc_sample(const ExperimentConfig& cfg);
RunResult run_orbits(const ExperimentConfig& cfg);
RunResult run_tde(const ExperimentConfig& cfg);

// The circuit command resolves its own key family (circuit.n, circuit.m,
// circuit.variant, output) instead of the experiment config.
RunResult run_circuit(const KeyValues& raw);

// Validates the raw keys for `command`, builds the effective config where
// applicable, and runs the driver. Unknown commands raise ConfigError.
RunResult run_command(const std::string& command, const KeyValues& raw);

}  // namespace rhodyn
