#include "rhodyn/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace rhodyn::kern {

namespace detail {

void axpy_scalar(double a, const cd* x, cd* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal_scalar(double a, cd* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

cd dot_scalar(const cd* x, const cd* y, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    im += x[i].real() * y[i].imag() - x[i].imag() * y[i].real();
  }
  return {re, im};
}

double nrm2sq_scalar(const cd* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return s;
}

void diag_axpy_scalar(const double* d, const cd* x, cd* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += d[i] * x[i];
}

void flip_axpy_scalar(double a, const cd* x, cd* y, std::size_t n,
                      std::size_t mask) {
  // Runs of `lb` consecutive indices map to consecutive indices after the
  // XOR, so the inner loop stays contiguous.
  std::size_t lb = mask & (~mask + 1);
  for (std::size_t base = 0; base < n; base += lb) {
    const cd* src = x + (base ^ mask);
    cd* dst = y + base;
    for (std::size_t j = 0; j < lb; ++j) dst[j] += a * src[j];
  }
}

void walsh_unnorm_scalar(cd* v, int L) {
  std::size_t n = std::size_t(1) << L;
  for (int b = 0; b < L; ++b) {
    std::size_t stride = std::size_t(1) << b;
    for (std::size_t base = 0; base < n; base += 2 * stride) {
      for (std::size_t j = 0; j < stride; ++j) {
        cd u = v[base + j];
        cd w = v[base + stride + j];
        v[base + j] = u + w;
        v[base + stride + j] = u - w;
      }
    }
  }
}

}  // namespace detail

namespace {

Backend resolve_backend() {
  const char* env = std::getenv("RHODYN_SIMD");
  if (env && *env) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && detail::avx2_available())
      return Backend::avx2;
    return Backend::scalar;
  }
  return detail::avx2_available() ? Backend::avx2 : Backend::scalar;
}

}  // namespace

Backend active_backend() {
  static Backend b = resolve_backend();
  return b;
}

const char* backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

void axpy(double a, const cd* x, cd* y, std::size_t n) {
  if (active_backend() == Backend::avx2) return detail::axpy_avx2(a, x, y, n);
  detail::axpy_scalar(a, x, y, n);
}

void scal(double a, cd* x, std::size_t n) {
  if (active_backend() == Backend::avx2) return detail::scal_avx2(a, x, n);
  detail::scal_scalar(a, x, n);
}

cd dot(const cd* x, const cd* y, std::size_t n) {
  if (active_backend() == Backend::avx2) return detail::dot_avx2(x, y, n);
  return detail::dot_scalar(x, y, n);
}

double nrm2sq(const cd* x, std::size_t n) {
  if (active_backend() == Backend::avx2) return detail::nrm2sq_avx2(x, n);
  return detail::nrm2sq_scalar(x, n);
}

void diag_axpy(const double* d, const cd* x, cd* y, std::size_t n) {
  if (active_backend() == Backend::avx2)
    return detail::diag_axpy_avx2(d, x, y, n);
  detail::diag_axpy_scalar(d, x, y, n);
}

void flip_axpy(double a, const cd* x, cd* y, std::size_t n, std::size_t mask) {
  if (active_backend() == Backend::avx2)
    return detail::flip_axpy_avx2(a, x, y, n, mask);
  detail::flip_axpy_scalar(a, x, y, n, mask);
}

void walsh_unnorm(cd* v, int L) {
  if (active_backend() == Backend::avx2) return detail::walsh_unnorm_avx2(v, L);
  detail::walsh_unnorm_scalar(v, L);
}

}  // namespace rhodyn::kern
