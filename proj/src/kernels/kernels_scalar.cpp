// SPDX-License-Identifier: Apache-2.0
#include "simforge/kernels.hpp"

#include <algorithm>

namespace simforge::kernels {
namespace scalar_impl {

// Plain re/im arithmetic keeps the reference free of the NaN-recovery
// branches that std::complex multiplication carries.
inline void caxpy(double ar, double ai, const double* x, double* y, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double xr = x[2 * j];
    const double xi = x[2 * j + 1];
    y[2 * j] += ar * xr - ai * xi;
    y[2 * j + 1] += ar * xi + ai * xr;
  }
}

void gemm(const cplx* a, const cplx* b, cplx* c, std::size_t m, std::size_t k, std::size_t n) {
  std::fill(c, c + m * n, cplx{});
  const auto* bd = reinterpret_cast<const double*>(b);
  auto* cd = reinterpret_cast<double*>(c);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      const cplx s = a[i * k + l];
      caxpy(s.real(), s.imag(), bd + 2 * l * n, cd + 2 * i * n, n);
    }
  }
}

void gemm_adjoint(const cplx* a, const cplx* b, cplx* c, std::size_t k, std::size_t m,
                  std::size_t n) {
  std::fill(c, c + m * n, cplx{});
  const auto* bd = reinterpret_cast<const double*>(b);
  auto* cd = reinterpret_cast<double*>(c);
  for (std::size_t l = 0; l < k; ++l) {
    for (std::size_t i = 0; i < m; ++i) {
      const cplx s = a[l * m + i];
      caxpy(s.real(), -s.imag(), bd + 2 * l * n, cd + 2 * i * n, n);
    }
  }
}

void scale_rows(const cplx* d, cplx* m, std::size_t rows, std::size_t cols) {
  auto* md = reinterpret_cast<double*>(m);
  for (std::size_t r = 0; r < rows; ++r) {
    const double dr = d[r].real();
    const double di = d[r].imag();
    double* row = md + 2 * r * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      const double xr = row[2 * j];
      const double xi = row[2 * j + 1];
      row[2 * j] = dr * xr - di * xi;
      row[2 * j + 1] = dr * xi + di * xr;
    }
  }
}

void row_dot_conj(const cplx* a, const cplx* b, cplx* out, std::size_t rows, std::size_t cols) {
  const auto* ad = reinterpret_cast<const double*>(a);
  const auto* bd = reinterpret_cast<const double*>(b);
  for (std::size_t r = 0; r < rows; ++r) {
    double re = 0.0;
    double im = 0.0;
    const double* ar = ad + 2 * r * cols;
    const double* br = bd + 2 * r * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      re += ar[2 * j] * br[2 * j] + ar[2 * j + 1] * br[2 * j + 1];
      im += ar[2 * j + 1] * br[2 * j] - ar[2 * j] * br[2 * j + 1];
    }
    out[r] = {re, im};
  }
}

void rank1_update(const cplx* t, cplx alpha, const cplx* u, std::size_t u_stride, const cplx* v,
                  cplx* out, std::size_t rows, std::size_t cols) {
  const auto* vd = reinterpret_cast<const double*>(v);
  for (std::size_t r = 0; r < rows; ++r) {
    const cplx ur = u[r * u_stride];
    const double sr = alpha.real() * ur.real() - alpha.imag() * ur.imag();
    const double si = alpha.real() * ur.imag() + alpha.imag() * ur.real();
    std::copy(t + r * cols, t + (r + 1) * cols, out + r * cols);
    caxpy(sr, si, vd, reinterpret_cast<double*>(out + r * cols), cols);
  }
}

double sum_abs2(const cplx* x, std::size_t n) {
  const auto* xd = reinterpret_cast<const double*>(x);
  double s = 0.0;
  for (std::size_t i = 0; i < 2 * n; ++i) s += xd[i] * xd[i];
  return s;
}

cplx dot_conj(const cplx* a, const cplx* b, std::size_t n) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

}  // namespace scalar_impl

const KernelTable& scalar_table() {
  static const KernelTable table{&scalar_impl::gemm, &scalar_impl::gemm_adjoint, &scalar_impl::scale_rows, &scalar_impl::row_dot_conj, &scalar_impl::rank1_update, &scalar_impl::sum_abs2, &scalar_impl::dot_conj};
  return table;
}

}  // namespace simforge::kernels
