// SPDX-License-Identifier: Apache-2.0
//
// AVX2 + FMA variants. One __m256d holds two interleaved complex values.
// This translation unit is compiled with -mavx2 -mfma and must only be
// entered after a runtime CPU check (see dispatch.cpp).

#include <immintrin.h>

#include <algorithm>

#include "simforge/kernels.hpp"

namespace simforge::kernels {
namespace avx2_impl {

// (ar + i ai) * [x0, x1] for a broadcast scalar.
inline __m256d cmul_bcast(__m256d ar, __m256d ai, __m256d x) {
  const __m256d xs = _mm256_permute_pd(x, 0x5);
  return _mm256_fmaddsub_pd(ar, x, _mm256_mul_pd(ai, xs));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Sum of even lanes and odd lanes respectively.
inline void hsum_even_odd(__m256d v, double& even, double& odd) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  even = _mm_cvtsd_f64(s);
  odd = _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

inline void caxpy(double ar, double ai, const double* x, double* y, std::size_t n) {
  const __m256d vr = _mm256_set1_pd(ar);
  const __m256d vi = _mm256_set1_pd(ai);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d x0 = _mm256_loadu_pd(x + 2 * j);
    const __m256d x1 = _mm256_loadu_pd(x + 2 * j + 4);
    const __m256d y0 = _mm256_loadu_pd(y + 2 * j);
    const __m256d y1 = _mm256_loadu_pd(y + 2 * j + 4);
    _mm256_storeu_pd(y + 2 * j, _mm256_add_pd(y0, cmul_bcast(vr, vi, x0)));
    _mm256_storeu_pd(y + 2 * j + 4, _mm256_add_pd(y1, cmul_bcast(vr, vi, x1)));
  }
  for (; j + 2 <= n; j += 2) {
    const __m256d x0 = _mm256_loadu_pd(x + 2 * j);
    const __m256d y0 = _mm256_loadu_pd(y + 2 * j);
    _mm256_storeu_pd(y + 2 * j, _mm256_add_pd(y0, cmul_bcast(vr, vi, x0)));
  }
  for (; j < n; ++j) {
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
    const __m256d vr = _mm256_set1_pd(d[r].real());
    const __m256d vi = _mm256_set1_pd(d[r].imag());
    double* row = md + 2 * r * cols;
    std::size_t j = 0;
    for (; j + 2 <= cols; j += 2) {
      _mm256_storeu_pd(row + 2 * j, cmul_bcast(vr, vi, _mm256_loadu_pd(row + 2 * j)));
    }
    for (; j < cols; ++j) {
      const double xr = row[2 * j];
      const double xi = row[2 * j + 1];
      row[2 * j] = d[r].real() * xr - d[r].imag() * xi;
      row[2 * j + 1] = d[r].real() * xi + d[r].imag() * xr;
    }
  }
}

// acc_pp accumulates [ar*br, ai*bi, ...]; acc_x accumulates [ar*bi, ai*br, ...].
inline void conj_products(const double* ad, const double* bd, std::size_t n, double& pp,
                          double& x_even, double& x_odd) {
  __m256d acc_pp = _mm256_setzero_pd();
  __m256d acc_x = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const __m256d va = _mm256_loadu_pd(ad + 2 * j);
    const __m256d vb = _mm256_loadu_pd(bd + 2 * j);
    acc_pp = _mm256_fmadd_pd(va, vb, acc_pp);
    acc_x = _mm256_fmadd_pd(va, _mm256_permute_pd(vb, 0x5), acc_x);
  }
  pp = hsum(acc_pp);
  hsum_even_odd(acc_x, x_even, x_odd);
  for (; j < n; ++j) {
    pp += ad[2 * j] * bd[2 * j] + ad[2 * j + 1] * bd[2 * j + 1];
    x_even += ad[2 * j] * bd[2 * j + 1];
    x_odd += ad[2 * j + 1] * bd[2 * j];
  }
}

void row_dot_conj(const cplx* a, const cplx* b, cplx* out, std::size_t rows, std::size_t cols) {
  const auto* ad = reinterpret_cast<const double*>(a);
  const auto* bd = reinterpret_cast<const double*>(b);
  for (std::size_t r = 0; r < rows; ++r) {
    double pp = 0.0, xe = 0.0, xo = 0.0;
    conj_products(ad + 2 * r * cols, bd + 2 * r * cols, cols, pp, xe, xo);
    out[r] = {pp, xo - xe};
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
  const std::size_t len = 2 * n;
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    const __m256d v0 = _mm256_loadu_pd(xd + i);
    const __m256d v1 = _mm256_loadu_pd(xd + i + 4);
    acc0 = _mm256_fmadd_pd(v0, v0, acc0);
    acc1 = _mm256_fmadd_pd(v1, v1, acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < len; ++i) s += xd[i] * xd[i];
  return s;
}

cplx dot_conj(const cplx* a, const cplx* b, std::size_t n) {
  double pp = 0.0, xe = 0.0, xo = 0.0;
  conj_products(reinterpret_cast<const double*>(a), reinterpret_cast<const double*>(b), n, pp,
                xe, xo);
  return {pp, xe - xo};
}

}  // namespace avx2_impl

const KernelTable* avx2_table() {
  static const KernelTable table{&avx2_impl::gemm, &avx2_impl::gemm_adjoint, &avx2_impl::scale_rows, &avx2_impl::row_dot_conj, &avx2_impl::rank1_update, &avx2_impl::sum_abs2, &avx2_impl::dot_conj};
  return &table;
}

}  // namespace simforge::kernels
