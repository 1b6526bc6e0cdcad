// SPDX-License-Identifier: Apache-2.0
#include "simforge/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "simforge/error.hpp"
#include "simforge/kernels.hpp"

namespace simforge {

CMatrix::CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("CMatrix: data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

CMatrix CMatrix::identity(std::size_t n) {
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::diagonal(std::span<const cplx> d) {
  CMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

CMatrix CMatrix::transpose() const {
  CMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

CMatrix CMatrix::adjoint() const {
  CMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = std::conj((*this)(r, c));
  return t;
}

double CMatrix::frobenius_norm2() const { return kernels::sum_abs2(data_.data(), data_.size()); }

double CMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool CMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](const cplx& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

CMatrix& CMatrix::operator*=(cplx s) {
  for (auto& v : data_) v *= s;
  return *this;
}

CMatrix& CMatrix::operator+=(const CMatrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw ShapeError("CMatrix +=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw ShapeError("CMatrix -=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

CMatrix multiply(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("multiply: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  CMatrix c(a.rows(), b.cols());
  kernels::gemm(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

CMatrix adjoint_multiply(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("adjoint_multiply: row count mismatch");
  CMatrix c(a.cols(), b.cols());
  kernels::gemm_adjoint(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

std::vector<cplx> multiply(const CMatrix& a, std::span<const cplx> x) {
  if (a.cols() != x.size()) throw ShapeError("multiply: vector length mismatch");
  std::vector<cplx> y(a.rows());
  kernels::gemm(a.data(), x.data(), y.data(), a.rows(), a.cols(), 1);
  return y;
}

CMatrix operator*(cplx s, CMatrix m) { return m *= s; }
CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }

cplx frobenius_inner(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("frobenius_inner: shape");
  return kernels::dot_conj(a.data(), b.data(), a.size());
}

double max_relative_difference(const CMatrix& a, const CMatrix& b, double floor) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("max_relative_difference");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max(std::abs(b.values()[i]), floor);
    worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]) / denom);
  }
  return worst;
}

}  // namespace simforge
