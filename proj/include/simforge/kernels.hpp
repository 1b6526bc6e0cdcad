// SPDX-License-Identifier: Apache-2.0
#pragma once

// Complex double inner-loop kernels. Every routine has a scalar reference
// implementation and, on x86-64, an AVX2/FMA variant chosen at runtime.
// All matrices are dense, row-major, interleaved (re, im).

#include <complex>
#include <cstddef>
#include <string_view>

namespace simforge::kernels {

using cplx = std::complex<double>;

enum class Backend { scalar, avx2 };

struct KernelTable {
  // C (m x n) = A (m x k) * B (k x n)
  void (*gemm)(const cplx* a, const cplx* b, cplx* c, std::size_t m, std::size_t k, std::size_t n);
  // C (m x n) = A^H * B with A (k x m), B (k x n)
  void (*gemm_adjoint)(const cplx* a, const cplx* b, cplx* c, std::size_t k, std::size_t m,
                       std::size_t n);
  // M <- diag(d) * M
  void (*scale_rows)(const cplx* d, cplx* m, std::size_t rows, std::size_t cols);
  // out[r] = sum_j a[r, j] * conj(b[r, j])
  void (*row_dot_conj)(const cplx* a, const cplx* b, cplx* out, std::size_t rows,
                       std::size_t cols);
  // out = t + alpha * u v^T, u read with stride u_stride
  void (*rank1_update)(const cplx* t, cplx alpha, const cplx* u, std::size_t u_stride,
                       const cplx* v, cplx* out, std::size_t rows, std::size_t cols);
  // sum_i |x_i|^2
  double (*sum_abs2)(const cplx* x, std::size_t n);
  // sum_i conj(a_i) * b_i
  cplx (*dot_conj)(const cplx* a, const cplx* b, std::size_t n);
};

const KernelTable& scalar_table();
// Returns nullptr when the variant was not compiled in.
const KernelTable* avx2_table();

bool backend_available(Backend b);
// First call picks avx2 when the CPU supports it, unless SIMFORGE_KERNELS=scalar.
Backend active_backend();
void set_active_backend(Backend b);
std::string_view backend_name(Backend b);
const KernelTable& active();

inline void gemm(const cplx* a, const cplx* b, cplx* c, std::size_t m, std::size_t k,
                 std::size_t n) {
  active().gemm(a, b, c, m, k, n);
}
inline void gemm_adjoint(const cplx* a, const cplx* b, cplx* c, std::size_t k, std::size_t m,
                         std::size_t n) {
  active().gemm_adjoint(a, b, c, k, m, n);
}
inline void scale_rows(const cplx* d, cplx* m, std::size_t rows, std::size_t cols) {
  active().scale_rows(d, m, rows, cols);
}
inline void row_dot_conj(const cplx* a, const cplx* b, cplx* out, std::size_t rows,
                         std::size_t cols) {
  active().row_dot_conj(a, b, out, rows, cols);
}
inline void rank1_update(const cplx* t, cplx alpha, const cplx* u, std::size_t u_stride,
                         const cplx* v, cplx* out, std::size_t rows, std::size_t cols) {
  active().rank1_update(t, alpha, u, u_stride, v, out, rows, cols);
}
inline double sum_abs2(const cplx* x, std::size_t n) { return active().sum_abs2(x, n); }
inline cplx dot_conj(const cplx* a, const cplx* b, std::size_t n) {
  return active().dot_conj(a, b, n);
}

}  // namespace simforge::kernels
