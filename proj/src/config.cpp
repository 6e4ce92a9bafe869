#include "rhodyn/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rhodyn/util.hpp"

namespace rhodyn {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    double v = std::stod(text, &pos);
    if (pos != text.size() || !std::isfinite(v))
      throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not a finite number: '" + text + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not an integer: '" + text + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(text, &pos);
    if (pos != text.size() || (!text.empty() && text[0] == '-'))
      throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not a non-negative integer: '" +
                      text + "'");
  }
}

const std::set<std::string>& base_keys() {
  static const std::set<std::string> keys = {
      "model.L",       "model.J",          "model.g0",
      "model.h0",      "model.h_s",        "model.basis",
      "quench.g",      "quench.h",         "thermal.beta",
      "thermal.source", "dmqmc.N_psip",    "dmqmc.N_loops",
      "dmqmc.delta_beta", "truncation.kind", "truncation.value",
      "observable",    "grid.t_max",       "grid.points",
      "seed",          "output"};
  return keys;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key");
    if (!kv.emplace(key, val).second)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

double get_double(const KeyValues& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : parse_double(key, it->second);
}

std::int64_t get_int(const KeyValues& kv, const std::string& key,
                     std::int64_t fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : parse_int(key, it->second);
}

std::vector<double> get_double_list(const KeyValues& kv, const std::string& key,
                                    const std::vector<double>& fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::vector<double> out;
  std::string item;
  std::istringstream in(it->second);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw ConfigError("key '" + key + "': empty list entry");
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

ModelParams ExperimentConfig::quench_params() const {
  ModelParams q = model;
  q.g = quench_g;
  q.h = quench_h;
  q.h_s = 0.0;
  return q;
}

std::vector<double> ExperimentConfig::time_grid() const {
  std::vector<double> t(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k)
    t[static_cast<std::size_t>(k)] = t_max * double(k) / double(points - 1);
  return t;
}

ExperimentConfig make_config(const KeyValues& raw,
                             const std::set<std::string>& extra_allowed) {
  for (const auto& [key, val] : raw) {
    (void)val;
    if (!base_keys().count(key) && !extra_allowed.count(key))
      throw ConfigError("unknown key '" + key + "'");
  }
  auto require = [&raw](const std::string& key) -> const std::string& {
    auto it = raw.find(key);
    if (it == raw.end())
      throw ConfigError("missing required key '" + key + "'");
    return it->second;
  };

  ExperimentConfig c;
  c.model.L = static_cast<int>(parse_int("model.L", require("model.L")));
  c.model.J = get_double(raw, "model.J", 1.0);
  c.model.g = parse_double("model.g0", require("model.g0"));
  c.model.h = get_double(raw, "model.h0", 0.0);
  c.model.h_s = get_double(raw, "model.h_s", 1.0 / double(c.model.L));

  std::string basis = "auto";
  if (auto it = raw.find("model.basis"); it != raw.end()) basis = it->second;
  if (basis == "auto") {
    c.basis_auto = true;
    c.model.basis = default_basis_for(c.model.g);
  } else {
    c.basis_auto = false;
    try {
      c.model.basis = basis_from_name(basis);
    } catch (const std::exception&) {
      throw ConfigError("key 'model.basis': expected auto, z, or x, got '" +
                        basis + "'");
    }
  }
  try {
    c.model.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("model block: ") + e.what());
  }

  c.quench_g = get_double(raw, "quench.g", 1.0);
  c.quench_h = get_double(raw, "quench.h", 1.0);

  c.beta = parse_double("thermal.beta", require("thermal.beta"));
  if (c.beta < 0.0)
    throw ConfigError("key 'thermal.beta': must be >= 0");

  std::string source = "ed";
  if (auto it = raw.find("thermal.source"); it != raw.end()) source = it->second;
  if (source == "ed") {
    c.source = RhoSource::Exact;
  } else if (source == "dmqmc") {
    c.source = RhoSource::DMQMC;
  } else {
    throw ConfigError("key 'thermal.source': expected ed or dmqmc, got '" +
                      source + "'");
  }
  if (c.source == RhoSource::DMQMC) {
    c.dmqmc.N_psip = parse_int("dmqmc.N_psip", require("dmqmc.N_psip"));
    if (c.dmqmc.N_psip <= 0)
      throw ConfigError("key 'dmqmc.N_psip': must be positive");
  } else {
    c.dmqmc.N_psip = get_int(raw, "dmqmc.N_psip", 0);
  }
  c.dmqmc.N_loops = static_cast<int>(get_int(raw, "dmqmc.N_loops", 10));
  if (c.dmqmc.N_loops <= 0)
    throw ConfigError("key 'dmqmc.N_loops': must be positive");
  c.dmqmc.delta_beta = get_double(raw, "dmqmc.delta_beta", 0.01);
  if (!(c.dmqmc.delta_beta > 0.0))
    throw ConfigError("key 'dmqmc.delta_beta': must be positive");

  std::string kind = "weight";
  if (auto it = raw.find("truncation.kind"); it != raw.end()) kind = it->second;
  if (kind == "weight") {
    double w = get_double(raw, "truncation.value", 1.0);
    if (!(w > 0.0 && w <= 1.0))
      throw ConfigError("key 'truncation.value': weight target must lie in (0, 1]");
    c.truncation = TruncTarget::weight(w);
  } else if (kind == "count") {
    std::int64_t n = get_int(raw, "truncation.value", -1);
    if (n < 0)
      throw ConfigError("key 'truncation.value': count budget must be a "
                        "non-negative integer");
    c.truncation = TruncTarget::count_limit(n);
  } else if (kind == "cutoff") {
    double eps = get_double(raw, "truncation.value", 0.0);
    if (eps < 0.0)
      throw ConfigError("key 'truncation.value': cutoff must be >= 0");
    c.truncation = TruncTarget::cutoff(eps);
  } else {
    throw ConfigError("key 'truncation.kind': expected weight, count, or "
                      "cutoff, got '" + kind + "'");
  }

  if (auto it = raw.find("observable"); it != raw.end()) {
    c.observable = Observable{obs_from_name(it->second), c.model.L};
  } else {
    c.observable = Observable{default_observable_for(c.model.basis), c.model.L};
  }

  c.t_max = get_double(raw, "grid.t_max", 10.0);
  if (!(c.t_max > 0.0)) throw ConfigError("key 'grid.t_max': must be positive");
  c.points = static_cast<int>(get_int(raw, "grid.points", 201));
  if (c.points < 2) throw ConfigError("key 'grid.points': need at least 2");
  c.seed = parse_uint("seed", raw.count("seed") ? raw.at("seed") : "1");
  c.output = require("output");
  if (c.output.empty()) throw ConfigError("key 'output': must not be empty");
  return c;
}

std::vector<std::pair<std::string, std::string>> effective_entries(
    const ExperimentConfig& c) {
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("grid.points", std::to_string(c.points));
  e.emplace_back("grid.t_max", round_trip(c.t_max));
  e.emplace_back("model.J", round_trip(c.model.J));
  e.emplace_back("model.L", std::to_string(c.model.L));
  e.emplace_back("model.basis", basis_name(c.model.basis));
  e.emplace_back("model.g0", round_trip(c.model.g));
  e.emplace_back("model.h0", round_trip(c.model.h));
  e.emplace_back("model.h_s", round_trip(c.model.h_s));
  e.emplace_back("observable", obs_name(c.observable.kind));
  e.emplace_back("output", c.output);
  e.emplace_back("quench.g", round_trip(c.quench_g));
  e.emplace_back("quench.h", round_trip(c.quench_h));
  e.emplace_back("seed", std::to_string(c.seed));
  e.emplace_back("thermal.beta", round_trip(c.beta));
  e.emplace_back("thermal.source",
                 c.source == RhoSource::DMQMC ? "dmqmc" : "ed");
  if (c.source == RhoSource::DMQMC) {
    e.emplace_back("dmqmc.N_loops", std::to_string(c.dmqmc.N_loops));
    e.emplace_back("dmqmc.N_psip", std::to_string(c.dmqmc.N_psip));
    e.emplace_back("dmqmc.delta_beta", round_trip(c.dmqmc.delta_beta));
  }
  switch (c.truncation.kind) {
    case TruncKind::Weight:
      e.emplace_back("truncation.kind", "weight");
      e.emplace_back("truncation.value", round_trip(c.truncation.value));
      break;
    case TruncKind::Count:
      e.emplace_back("truncation.kind", "count");
      e.emplace_back("truncation.value", std::to_string(c.truncation.count));
      break;
    case TruncKind::Cutoff:
      e.emplace_back("truncation.kind", "cutoff");
      e.emplace_back("truncation.value", round_trip(c.truncation.value));
      break;
  }
  std::sort(e.begin(), e.end());
  return e;
}

}  // namespace rhodyn
