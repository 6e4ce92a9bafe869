#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rhodyn/runner.hpp"
#include "rhodyn/util.hpp"

namespace {

// --set overrides win over the config file; the pair is applied before any
// validation so a file can serve as a template.
rhodyn::KeyValues merge_input(const std::string& config_path,
                              const std::vector<std::string>& sets) {
  rhodyn::KeyValues raw;
  if (!config_path.empty()) raw = rhodyn::load_key_values(config_path);
  for (const auto& s : sets) {
    std::size_t eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw rhodyn::ConfigError("--set expects key=value, got '" + s + "'");
    raw[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (raw.empty())
    throw rhodyn::ConfigError("no configuration given: pass --config and/or --set");
  return raw;
}

int run(const std::string& command, const std::string& config_path,
        const std::vector<std::string>& sets) {
  rhodyn::RunResult res =
      rhodyn::run_command(command, merge_input(config_path, sets));
  std::printf("%s\n", res.summary.c_str());
  for (const auto& a : res.artifacts) std::printf("wrote %s\n", a.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermal quench dynamics from truncated density matrices"};
  app.require_subcommand(1);

  struct Cmd {
    const char* name;
    const char* desc;
  };
  const Cmd cmds[] = {
      {"structure", "Sweep the retained-element count over (g0, beta) grids"},
      {"quench", "Reconstruct <O(t)> after a quench, with oracle when exact"
                 " diagonalization is in reach"},
      {"dmqmc-sample", "Sample a thermal density matrix stochastically and"
                       " write the element statistics"},
      {"orbits", "Build and inspect the symmetry-orbit simulation plan"},
      {"circuit", "Synthesize a two-state superposition circuit and verify"
                  " its amplitudes"},
      {"tde", "Thermal diagonal-ensemble average of the observable"},
  };

  std::string config_path;
  std::vector<std::string> sets;
  std::vector<CLI::App*> subs;
  for (const Cmd& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.desc);
    sub->add_option("-c,--config", config_path,
                    "Config file of key = value lines");
    sub->add_option("-s,--set", sets,
                    "Override or add one key=value entry (repeatable)");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), config_path, sets);
  } catch (const rhodyn::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const rhodyn::CapacityError& e) {
    std::fprintf(stderr, "capacity error: %s\n", e.what());
    return 3;
  } catch (const rhodyn::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
