#include "rbo/matrix.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "rbo/lattice.h"

namespace rbo {

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix DenseMatrix::block(std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) const {
  if (r0 + rows > rows_ || c0 + cols > cols_) throw DomainError("block out of range");
  DenseMatrix b(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void DenseMatrix::set_block(std::size_t r0, std::size_t c0, const DenseMatrix& b) {
  if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_) throw DomainError("block out of range");
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DomainError("matrix sum: shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DomainError("matrix difference: shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

double DenseMatrix::frobenius() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return std::sqrt(s);
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

double DenseMatrix::max_row_sum() const {
  double m = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
    m = std::max(m, s);
  }
  return m;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DomainError("matrix product: shape mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

std::vector<double> operator*(const DenseMatrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw DomainError("matrix-vector product: shape mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

SymMatrix SymMatrix::from_dense(const DenseMatrix& a, double tol) {
  if (a.rows() != a.cols()) throw DomainError("symmetric matrix must be square");
  const double scale = std::max(a.max_abs(), 1e-300);
  SymMatrix s(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i; j < a.cols(); ++j) {
      if (std::abs(a(i, j) - a(j, i)) > tol * scale)
        throw DomainError(fmt::format("matrix is not symmetric at ({}, {})", i, j));
      s.set(i, j, 0.5 * (a(i, j) + a(j, i)));
    }
  return s;
}

SymMatrix SymMatrix::diagonal(std::span<const double> values) {
  SymMatrix s(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) s.set(i, i, values[i]);
  return s;
}

std::vector<double> SymMatrix::diag() const {
  std::vector<double> d(dim());
  for (std::size_t i = 0; i < dim(); ++i) d[i] = m_(i, i);
  return d;
}

bool SymMatrix::is_diagonal() const {
  for (std::size_t i = 0; i < dim(); ++i)
    for (std::size_t j = i + 1; j < dim(); ++j)
      if (m_(i, j) != 0.0) return false;
  return true;
}

bool SymMatrix::is_tridiagonal() const {
  for (std::size_t i = 0; i < dim(); ++i)
    for (std::size_t j = i + 2; j < dim(); ++j)
      if (m_(i, j) != 0.0) return false;
  return true;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) t += m_(i, i);
  return t;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  m_ += o.m_;
  return *this;
}
SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  m_ -= o.m_;
  return *this;
}
SymMatrix& SymMatrix::operator*=(double s) {
  m_ *= s;
  return *this;
}
SymMatrix SymMatrix::operator-() const {
  SymMatrix r = *this;
  r *= -1.0;
  return r;
}

SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

void write_triplets(std::ostream& os, const DenseMatrix& m) {
  fmt::print(os, "# rows={} cols={} format=row col value (zero-based)\n", m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) fmt::print(os, "{} {} {:.17g}\n", i, j, m(i, j));
}

}  // namespace rbo
