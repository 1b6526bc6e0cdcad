// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace simforge {

using cplx = std::complex<double>;

// Dense row-major complex matrix.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data);

  static CMatrix identity(std::size_t n);
  static CMatrix diagonal(std::span<const cplx> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  cplx* data() { return data_.data(); }
  const cplx* data() const { return data_.data(); }
  std::span<cplx> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const cplx> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  const std::vector<cplx>& values() const { return data_; }

  CMatrix transpose() const;
  CMatrix adjoint() const;
  double frobenius_norm2() const;
  double max_abs() const;
  bool all_finite() const;

  CMatrix& operator*=(cplx s);
  CMatrix& operator+=(const CMatrix& o);
  CMatrix& operator-=(const CMatrix& o);

  friend bool operator==(const CMatrix&, const CMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

// A * B through the active kernel backend. Throws ShapeError on mismatch.
CMatrix multiply(const CMatrix& a, const CMatrix& b);
// A^H * B.
CMatrix adjoint_multiply(const CMatrix& a, const CMatrix& b);
// A * x.
std::vector<cplx> multiply(const CMatrix& a, std::span<const cplx> x);

CMatrix operator*(cplx s, CMatrix m);
CMatrix operator+(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a, const CMatrix& b);

// sum conj(a) .* b over all entries.
cplx frobenius_inner(const CMatrix& a, const CMatrix& b);

// max |a - b| / max(|b|, floor) entrywise.
double max_relative_difference(const CMatrix& a, const CMatrix& b, double floor = 1e-300);

}  // namespace simforge
