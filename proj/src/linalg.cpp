#include "rhodyn/linalg.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <stdexcept>
#include <string>

#include "rhodyn/util.hpp"

namespace rhodyn::linalg {

void gemm(bool trans_a, bool trans_b, double alpha, const DMat& a,
          const DMat& b, double beta, DMat& c) {
  std::int64_t m = trans_a ? a.cols : a.rows;
  std::int64_t k = trans_a ? a.rows : a.cols;
  std::int64_t kb = trans_b ? b.cols : b.rows;
  std::int64_t n = trans_b ? b.rows : b.cols;
  if (k != kb) throw std::invalid_argument("gemm: inner dimensions differ");
  if (c.rows != m || c.cols != n)
    throw std::invalid_argument("gemm: output shape mismatch");
  cblas_dgemm(CblasColMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a.a.data(),
              static_cast<int>(a.rows), b.a.data(), static_cast<int>(b.rows),
              beta, c.a.data(), static_cast<int>(c.rows));
}

DMat aat(const DMat& a) {
  DMat c(a.rows, a.rows);
  cblas_dsyrk(CblasColMajor, CblasUpper, CblasNoTrans,
              static_cast<int>(a.rows), static_cast<int>(a.cols), 1.0,
              a.a.data(), static_cast<int>(a.rows), 0.0, c.a.data(),
              static_cast<int>(c.rows));
  for (std::int64_t j = 0; j < c.cols; ++j)
    for (std::int64_t i = j + 1; i < c.rows; ++i) c.at(i, j) = c.at(j, i);
  return c;
}

std::vector<double> eig_sym(DMat& a) {
  if (a.rows != a.cols) throw std::invalid_argument("eig_sym: square required");
  std::vector<double> w(a.rows);
  int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U',
                            static_cast<int>(a.rows), a.a.data(),
                            static_cast<int>(a.rows), w.data());
  if (info != 0)
    throw NumericalError("dsyevd failed with info=" + std::to_string(info));
  return w;
}

void eig_tridiag(std::vector<double>& diag, std::vector<double>& offdiag,
                 std::vector<double>& z) {
  int k = static_cast<int>(diag.size());
  z.assign(static_cast<std::size_t>(k) * k, 0.0);
  int info = LAPACKE_dstev(LAPACK_COL_MAJOR, 'V', k, diag.data(),
                           offdiag.data(), z.data(), k);
  if (info != 0)
    throw NumericalError("dstev failed with info=" + std::to_string(info));
}

}  // namespace rhodyn::linalg
