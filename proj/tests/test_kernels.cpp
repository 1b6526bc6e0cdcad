// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "simforge/kernels.hpp"

using simforge::kernels::cplx;
namespace k = simforge::kernels;

namespace {

std::vector<cplx> random_values(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<cplx> v(n);
  for (auto& x : v) x = {g(rng), g(rng)};
  return v;
}

double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Textbook triple loop with std::complex, independent of both backends.
std::vector<cplx> naive_gemm(const std::vector<cplx>& a, const std::vector<cplx>& b,
                             std::size_t m, std::size_t kk, std::size_t n) {
  std::vector<cplx> c(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      cplx s{};
      for (std::size_t l = 0; l < kk; ++l) s += a[i * kk + l] * b[l * n + j];
      c[i * n + j] = s;
    }
  return c;
}

const std::size_t kShapes[][3] = {{1, 1, 1}, {3, 5, 7}, {4, 4, 4}, {9, 2, 13}, {16, 11, 5}, {33, 17, 31}};

}  // namespace

TEST_CASE("scalar gemm matches the textbook triple loop") {
  std::mt19937_64 rng(1);
  for (const auto& s : kShapes) {
    const auto a = random_values(s[0] * s[1], rng);
    const auto b = random_values(s[1] * s[2], rng);
    std::vector<cplx> c(s[0] * s[2]);
    k::scalar_table().gemm(a.data(), b.data(), c.data(), s[0], s[1], s[2]);
    CHECK(max_abs_diff(c, naive_gemm(a, b, s[0], s[1], s[2])) < 1e-12);
  }
}

TEST_CASE("scalar gemm_adjoint equals gemm with an explicit conjugate transpose") {
  std::mt19937_64 rng(2);
  for (const auto& s : kShapes) {
    const std::size_t kk = s[0], m = s[1], n = s[2];
    const auto a = random_values(kk * m, rng);
    const auto b = random_values(kk * n, rng);
    std::vector<cplx> ah(m * kk);
    for (std::size_t i = 0; i < kk; ++i)
      for (std::size_t j = 0; j < m; ++j) ah[j * kk + i] = std::conj(a[i * m + j]);
    std::vector<cplx> c(m * n);
    k::scalar_table().gemm_adjoint(a.data(), b.data(), c.data(), kk, m, n);
    CHECK(max_abs_diff(c, naive_gemm(ah, b, m, kk, n)) < 1e-12);
  }
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  const auto* simd = k::avx2_table();
  if (simd == nullptr || !k::backend_available(k::Backend::avx2)) {
    MESSAGE("AVX2 variant unavailable on this host; skipping");
    return;
  }
  const auto& ref = k::scalar_table();
  std::mt19937_64 rng(3);
  for (const auto& s : kShapes) {
    const std::size_t m = s[0], kk = s[1], n = s[2];
    CAPTURE(m);
    CAPTURE(kk);
    CAPTURE(n);
    const auto a = random_values(m * kk, rng);
    const auto b = random_values(kk * n, rng);
    std::vector<cplx> c0(m * n), c1(m * n);
    ref.gemm(a.data(), b.data(), c0.data(), m, kk, n);
    simd->gemm(a.data(), b.data(), c1.data(), m, kk, n);
    CHECK(max_abs_diff(c0, c1) < 1e-12 * static_cast<double>(kk));

    const auto at = random_values(kk * m, rng);
    ref.gemm_adjoint(at.data(), b.data(), c0.data(), kk, m, n);
    simd->gemm_adjoint(at.data(), b.data(), c1.data(), kk, m, n);
    CHECK(max_abs_diff(c0, c1) < 1e-12 * static_cast<double>(kk));

    const auto d = random_values(m, rng);
    auto r0 = random_values(m * n, rng);
    auto r1 = r0;
    ref.scale_rows(d.data(), r0.data(), m, n);
    simd->scale_rows(d.data(), r1.data(), m, n);
    CHECK(max_abs_diff(r0, r1) < 1e-13);

    const auto x = random_values(m * n, rng);
    const auto y = random_values(m * n, rng);
    std::vector<cplx> o0(m), o1(m);
    ref.row_dot_conj(x.data(), y.data(), o0.data(), m, n);
    simd->row_dot_conj(x.data(), y.data(), o1.data(), m, n);
    CHECK(max_abs_diff(o0, o1) < 1e-12 * static_cast<double>(n));

    const auto u = random_values(m * 3, rng);
    const auto v = random_values(n, rng);
    const cplx alpha{0.3, -1.2};
    ref.rank1_update(x.data(), alpha, u.data() + 1, 3, v.data(), r0.data(), m, n);
    simd->rank1_update(x.data(), alpha, u.data() + 1, 3, v.data(), r1.data(), m, n);
    CHECK(max_abs_diff(r0, r1) < 1e-13);

    const double n0 = ref.sum_abs2(x.data(), x.size());
    const double n1 = simd->sum_abs2(x.data(), x.size());
    CHECK(std::abs(n0 - n1) <= 1e-13 * n0);

    const cplx d0 = ref.dot_conj(x.data(), y.data(), x.size());
    const cplx d1 = simd->dot_conj(x.data(), y.data(), x.size());
    CHECK(std::abs(d0 - d1) < 1e-12 * static_cast<double>(x.size()));
  }
}

TEST_CASE("row_dot_conj and dot_conj conjugate the second and first argument") {
  const std::vector<cplx> a{{1.0, 2.0}, {3.0, -1.0}, {0.5, 0.5}};
  const std::vector<cplx> b{{-2.0, 1.0}, {0.0, 4.0}, {1.0, -3.0}};
  cplx expect_row{}, expect_dot{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    expect_row += a[i] * std::conj(b[i]);
    expect_dot += std::conj(a[i]) * b[i];
  }
  for (auto backend : {k::Backend::scalar, k::Backend::avx2}) {
    if (!k::backend_available(backend)) continue;
    const auto& t = backend == k::Backend::scalar ? k::scalar_table() : *k::avx2_table();
    cplx row{};
    t.row_dot_conj(a.data(), b.data(), &row, 1, a.size());
    CHECK(std::abs(row - expect_row) < 1e-14);
    CHECK(std::abs(t.dot_conj(a.data(), b.data(), a.size()) - expect_dot) < 1e-14);
  }
}

TEST_CASE("backend selection can be forced") {
  const auto before = k::active_backend();
  k::set_active_backend(k::Backend::scalar);
  CHECK(k::active_backend() == k::Backend::scalar);
  CHECK(&k::active() == &k::scalar_table());
  k::set_active_backend(before);
  CHECK(k::active_backend() == before);
}
