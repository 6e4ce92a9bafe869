#pragma once

#include <complex>
#include <cstddef>

// Vector kernels behind the matrix-free hot paths. Each op has a scalar
// reference implementation and an AVX2+FMA variant compiled in its own
// translation unit; the active backend is resolved once at startup from
// cpuid, overridable with RHODYN_SIMD=scalar|avx2. The two backends agree
// to roundoff (FMA and lane-reduction order may differ), and the unit tests
// pin that equivalence.

namespace rhodyn::kern {

using cd = std::complex<double>;

enum class Backend { scalar, avx2 };

Backend active_backend();
const char* backend_name(Backend b);

// y += a * x  (real scalar, complex vectors)
void axpy(double a, const cd* x, cd* y, std::size_t n);

// x *= a
void scal(double a, cd* x, std::size_t n);

// sum_i conj(x[i]) * y[i]
cd dot(const cd* x, const cd* y, std::size_t n);

// sum_i |x[i]|^2
double nrm2sq(const cd* x, std::size_t n);

// y[i] += d[i] * x[i]  (real diagonal)
void diag_axpy(const double* d, const cd* x, cd* y, std::size_t n);

// y[i] += a * x[i ^ mask]  for all i; n a power of two, 0 < mask < n.
// This is the bit-flip permutation at the core of the spin-chain H*v.
void flip_axpy(double a, const cd* x, cd* y, std::size_t n, std::size_t mask);

// In-place unnormalized Walsh-Hadamard butterflies over 2^L amplitudes;
// callers scale by 2^(-L/2) to make it orthogonal.
void walsh_unnorm(cd* v, int L);

namespace detail {
// Scalar reference implementations, exposed for equivalence tests.
void axpy_scalar(double a, const cd* x, cd* y, std::size_t n);
void scal_scalar(double a, cd* x, std::size_t n);
cd dot_scalar(const cd* x, const cd* y, std::size_t n);
double nrm2sq_scalar(const cd* x, std::size_t n);
void diag_axpy_scalar(const double* d, const cd* x, cd* y, std::size_t n);
void flip_axpy_scalar(double a, const cd* x, cd* y, std::size_t n,
                      std::size_t mask);
void walsh_unnorm_scalar(cd* v, int L);

// AVX2 variants; calling these on hardware without AVX2+FMA is undefined.
bool avx2_available();
void axpy_avx2(double a, const cd* x, cd* y, std::size_t n);
void scal_avx2(double a, cd* x, std::size_t n);
cd dot_avx2(const cd* x, const cd* y, std::size_t n);
double nrm2sq_avx2(const cd* x, std::size_t n);
void diag_axpy_avx2(const double* d, const cd* x, cd* y, std::size_t n);
void flip_axpy_avx2(double a, const cd* x, cd* y, std::size_t n,
                    std::size_t mask);
void walsh_unnorm_avx2(cd* v, int L);
}  // namespace detail

}  // namespace rhodyn::kern
