#pragma once

#include <charconv>
#include <chrono>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rhodyn {

using cd = std::complex<double>;

// Raised when a request exceeds a configured capacity (dense diagonalization
// past max_dense_L, Krylov memory, ...). The CLI maps it to exit code 3.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised on numerical failure (non-convergence, degenerate normalization, ...).
// The CLI maps it to exit code 4.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised on malformed configs or CLI input. The CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest decimal form that parses back to the same float64; CSV and
// manifest writers use it so artifacts carry full precision.
inline std::string round_trip(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

// Worker count: RHODYN_THREADS wins over the requested value; 0 means "ask
// the hardware".
inline int resolve_threads(int requested) {
  std::string s = env_or("RHODYN_THREADS", "");
  long n = requested;
  if (!s.empty()) n = std::strtol(s.c_str(), nullptr, 10);
  if (n <= 0) n = static_cast<long>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  return static_cast<int>(n);
}

// Chunked parallel map. Results must be merged by the caller in chunk order
// when ordering matters; the function itself guarantees that fn(i) runs for
// every i in [0, n) exactly once.
inline void parallel_for(std::int64_t n, int threads,
                         const std::function<void(std::int64_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::int64_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    std::int64_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Pairwise (cascade) summation; keeps rounding error O(log n) for the long
// contraction sums.
template <typename T>
T pairwise_sum(const T* x, std::size_t n) {
  if (n == 0) return T{};
  if (n <= 8) {
    T s = x[0];
    for (std::size_t i = 1; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

template <typename T>
T pairwise_sum(const std::vector<T>& x) {
  return pairwise_sum(x.data(), x.size());
}

}  // namespace rhodyn
