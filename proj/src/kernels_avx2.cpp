// AVX2+FMA kernel variants. This file is the only TU compiled with
// -mavx2 -mfma; nothing here runs unless cpuid reports both features.

#include <immintrin.h>

#include "rhodyn/kernels.hpp"

namespace rhodyn::kern::detail {

bool avx2_available() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

}  // namespace

void axpy_avx2(double a, const cd* x, cd* y, std::size_t n) {
  const double* xs = reinterpret_cast<const double*>(x);
  double* ys = reinterpret_cast<double*>(y);
  std::size_t m = 2 * n, i = 0;
  __m256d va = _mm256_set1_pd(a);
  for (; i + 4 <= m; i += 4) {
    __m256d vy = _mm256_loadu_pd(ys + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(xs + i), vy);
    _mm256_storeu_pd(ys + i, vy);
  }
  for (; i < m; ++i) ys[i] += a * xs[i];
}

void scal_avx2(double a, cd* x, std::size_t n) {
  double* xs = reinterpret_cast<double*>(x);
  std::size_t m = 2 * n, i = 0;
  __m256d va = _mm256_set1_pd(a);
  for (; i + 4 <= m; i += 4)
    _mm256_storeu_pd(xs + i, _mm256_mul_pd(va, _mm256_loadu_pd(xs + i)));
  for (; i < m; ++i) xs[i] *= a;
}

cd dot_avx2(const cd* x, const cd* y, std::size_t n) {
  const double* xs = reinterpret_cast<const double*>(x);
  const double* ys = reinterpret_cast<const double*>(y);
  std::size_t m = 2 * n, i = 0;
  __m256d re = _mm256_setzero_pd();
  __m256d im = _mm256_setzero_pd();
  // sign pattern (+,-,+,-) applied to x*swap(y) yields xr*yi - xi*yr pairs
  __m256d sgn = _mm256_set_pd(-1.0, 1.0, -1.0, 1.0);
  for (; i + 4 <= m; i += 4) {
    __m256d vx = _mm256_loadu_pd(xs + i);
    __m256d vy = _mm256_loadu_pd(ys + i);
    re = _mm256_fmadd_pd(vx, vy, re);
    __m256d yswap = _mm256_permute_pd(vy, 0x5);
    im = _mm256_fmadd_pd(_mm256_mul_pd(vx, yswap), sgn, im);
  }
  double rs = hsum(re), is = hsum(im);
  for (; i < m; i += 2) {
    rs += xs[i] * ys[i] + xs[i + 1] * ys[i + 1];
    is += xs[i] * ys[i + 1] - xs[i + 1] * ys[i];
  }
  return {rs, is};
}

double nrm2sq_avx2(const cd* x, std::size_t n) {
  const double* xs = reinterpret_cast<const double*>(x);
  std::size_t m = 2 * n, i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= m; i += 4) {
    __m256d vx = _mm256_loadu_pd(xs + i);
    acc = _mm256_fmadd_pd(vx, vx, acc);
  }
  double s = hsum(acc);
  for (; i < m; ++i) s += xs[i] * xs[i];
  return s;
}

void diag_axpy_avx2(const double* d, const cd* x, cd* y, std::size_t n) {
  const double* xs = reinterpret_cast<const double*>(x);
  double* ys = reinterpret_cast<double*>(y);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m128d dp = _mm_loadu_pd(d + i);
    // (d0, d0, d1, d1)
    __m256d dd =
        _mm256_permute4x64_pd(_mm256_castpd128_pd256(dp), 0x50);
    __m256d vy = _mm256_loadu_pd(ys + 2 * i);
    vy = _mm256_fmadd_pd(dd, _mm256_loadu_pd(xs + 2 * i), vy);
    _mm256_storeu_pd(ys + 2 * i, vy);
  }
  for (; i < n; ++i) y[i] += d[i] * x[i];
}

void flip_axpy_avx2(double a, const cd* x, cd* y, std::size_t n,
                    std::size_t mask) {
  const double* xs = reinterpret_cast<const double*>(x);
  double* ys = reinterpret_cast<double*>(y);
  __m256d va = _mm256_set1_pd(a);
  std::size_t lb = mask & (~mask + 1);
  if (lb == 1) {
    // Partner complexes sit swapped inside the neighbouring 2-complex block.
    std::size_t blockmask = mask & ~std::size_t(1);
    for (std::size_t base = 0; base < n; base += 2) {
      const double* src = xs + 2 * (base ^ blockmask);
      __m256d vx = _mm256_loadu_pd(src);
      vx = _mm256_permute2f128_pd(vx, vx, 0x01);
      __m256d vy = _mm256_loadu_pd(ys + 2 * base);
      _mm256_storeu_pd(ys + 2 * base, _mm256_fmadd_pd(va, vx, vy));
    }
    return;
  }
  std::size_t run = 2 * lb;  // doubles per contiguous run, multiple of 4
  for (std::size_t base = 0; base < n; base += lb) {
    const double* src = xs + 2 * (base ^ mask);
    double* dst = ys + 2 * base;
    for (std::size_t j = 0; j < run; j += 4) {
      __m256d vy = _mm256_loadu_pd(dst + j);
      vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(src + j), vy);
      _mm256_storeu_pd(dst + j, vy);
    }
  }
}

void walsh_unnorm_avx2(cd* v, int L) {
  double* vs = reinterpret_cast<double*>(v);
  std::size_t n = std::size_t(1) << L;
  if (n < 2) return;
  {
    // bit 0: butterfly between adjacent complexes within one 256-bit lane pair
    for (std::size_t base = 0; base < n; base += 2) {
      __m256d x = _mm256_loadu_pd(vs + 2 * base);
      __m256d t = _mm256_permute2f128_pd(x, x, 0x01);
      __m256d plus = _mm256_add_pd(x, t);
      // lanes 2,3 must hold v0 - v1; there t carries v0 and x carries v1
      __m256d minus = _mm256_sub_pd(t, x);
      _mm256_storeu_pd(vs + 2 * base, _mm256_blend_pd(plus, minus, 0xC));
    }
  }
  for (int b = 1; b < L; ++b) {
    std::size_t stride = std::size_t(1) << b;  // complexes
    std::size_t run = 2 * stride;              // doubles, multiple of 4
    for (std::size_t base = 0; base < n; base += 2 * stride) {
      double* u = vs + 2 * base;
      double* w = u + run;
      for (std::size_t j = 0; j < run; j += 4) {
        __m256d vu = _mm256_loadu_pd(u + j);
        __m256d vw = _mm256_loadu_pd(w + j);
        _mm256_storeu_pd(u + j, _mm256_add_pd(vu, vw));
        _mm256_storeu_pd(w + j, _mm256_sub_pd(vu, vw));
      }
    }
  }
}

}  // namespace rhodyn::kern::detail
