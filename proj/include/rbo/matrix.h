// Dense real matrices. Row-major storage.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace rbo {

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  DenseMatrix transposed() const;
  DenseMatrix block(std::size_t r0, std::size_t c0, std::size_t rows, std::size_t cols) const;
  void set_block(std::size_t r0, std::size_t c0, const DenseMatrix& b);

  DenseMatrix& operator+=(const DenseMatrix& o);
  DenseMatrix& operator-=(const DenseMatrix& o);
  DenseMatrix& operator*=(double s);

  double frobenius() const;
  double max_abs() const;
  // max_i sum_j |a_ij|
  double max_row_sum() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);
DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
std::vector<double> operator*(const DenseMatrix& a, std::span<const double> x);

// Real symmetric matrix. Every write mirrors across the diagonal, so the
// stored matrix is exactly symmetric.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n) : m_(n, n) {}

  // Rejects input whose asymmetry exceeds `tol * max|a_ij|`, then
  // symmetrizes by averaging.
  static SymMatrix from_dense(const DenseMatrix& a, double tol = 1e-12);
  static SymMatrix diagonal(std::span<const double> values);

  std::size_t dim() const { return m_.rows(); }

  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  void set(std::size_t i, std::size_t j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
  }
  void add(std::size_t i, std::size_t j, double v) {
    m_(i, j) += v;
    if (i != j) m_(j, i) += v;
  }

  const DenseMatrix& dense() const { return m_; }

  std::vector<double> diag() const;
  bool is_diagonal() const;
  // Nonzero only on the first sub/super diagonal.
  bool is_tridiagonal() const;
  double trace() const;

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s);
  SymMatrix operator-() const;

  // Gershgorin bound on the spectral radius.
  double gershgorin_radius() const { return m_.max_row_sum(); }

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  DenseMatrix m_;
};

SymMatrix operator+(SymMatrix a, const SymMatrix& b);
SymMatrix operator-(SymMatrix a, const SymMatrix& b);
SymMatrix operator*(double s, SymMatrix a);

// Writes one "row col value" line per nonzero entry, zero-based indices,
// values printed with 17 significant digits. A leading `#` comment line
// records the dimensions.
void write_triplets(std::ostream& os, const DenseMatrix& m);

}  // namespace rbo
