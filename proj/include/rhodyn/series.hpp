#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rhodyn {

struct SeriesMeta {
  std::string source;  // "exact", "reconstruction", ...
  std::string method;  // "eigendecomposition", "krylov", ...
  double w = 1.0;
  std::int64_t N_w = 0;
  std::int64_t N_sim = 0;
};

// Observable expectation over a time grid. stat_err is empty when the source
// carries no statistical uncertainty (ED-exact data).
struct TimeSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> stat_err;
  SeriesMeta meta;
};

}  // namespace rhodyn
