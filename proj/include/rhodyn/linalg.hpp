#pragma once

#include <cstdint>
#include <vector>

// Thin column-major dense-matrix type plus the few BLAS/LAPACK entry points
// the project needs. Anything heavier (eigensolves, big products) goes
// through OpenBLAS/LAPACKE; the matrix-free paths live in kernels.hpp.

namespace rhodyn::linalg {

struct DMat {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> a;  // column-major

  DMat() = default;
  DMat(std::int64_t r, std::int64_t c)
      : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(std::int64_t i, std::int64_t j) {
    return a[static_cast<std::size_t>(j) * rows + i];
  }
  double at(std::int64_t i, std::int64_t j) const {
    return a[static_cast<std::size_t>(j) * rows + i];
  }
  double* col(std::int64_t j) {
    return a.data() + static_cast<std::size_t>(j) * rows;
  }
  const double* col(std::int64_t j) const {
    return a.data() + static_cast<std::size_t>(j) * rows;
  }
};

// c = alpha * op(a) * op(b) + beta * c
void gemm(bool trans_a, bool trans_b, double alpha, const DMat& a,
          const DMat& b, double beta, DMat& c);

// c = a * a^T with both triangles filled (a may be rectangular)
DMat aat(const DMat& a);

// Symmetric eigenproblem: on return `a` holds eigenvectors (columns, ascending
// eigenvalue order) and the return value holds eigenvalues. Throws
// NumericalError on LAPACK failure.
std::vector<double> eig_sym(DMat& a);

// Symmetric tridiagonal eigenproblem for the Lanczos step: diag/offdiag in,
// eigenvalues in `diag`, eigenvectors in z (k x k, column-major).
void eig_tridiag(std::vector<double>& diag, std::vector<double>& offdiag,
                 std::vector<double>& z);

}  // namespace rhodyn::linalg
