// Dense real symmetric eigensolver (Householder tridiagonalization followed
// by implicitly shifted QL) and Sturm-sequence bisection on tridiagonals.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rbo/matrix.h"
#include "rbo/operators.h"

namespace rbo {

struct Spectrum {
  std::vector<double> values;            // ascending, multiplicities kept
  std::optional<DenseMatrix> vectors;    // column k pairs with values[k]
  BlockMatrix::Shape shape = BlockMatrix::Shape::General;

  std::size_t size() const { return values.size(); }
  double norm() const;  // max |lambda|
};

struct SolveReport {
  bool converged = true;
  double max_residual = 0.0;          // max_k ||A v_k - l_k v_k|| / ||A||, vectors only
  double orthogonality_defect = 0.0;  // max |V^T V - 1|, vectors only
  std::size_t iterations = 0;
};

struct EigenOptions {
  bool want_vectors = false;
  double residual_tol = 1e-10;
  std::size_t max_iterations_per_eigenvalue = 60;
};

struct EigenResult {
  Spectrum spectrum;
  SolveReport report;
};

EigenResult eigvalsh(const SymMatrix& m, const EigenOptions& opts = {});
EigenResult eigvalsh(const BlockMatrix& m, const EigenOptions& opts = {});

struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  // size diag.size() - 1

  static Tridiagonal from(const SymMatrix& m);  // throws DomainError unless tridiagonal
};

// Number of eigenvalues below x. An eigenvalue exactly at x may be counted.
std::size_t sturm_count(const Tridiagonal& t, double x);

// Smallest eigenvalue by bisection to absolute tolerance `tol`.
double min_eig_tridiag(const Tridiagonal& t, double tol = 1e-12);
double min_eig_tridiag(const SymMatrix& m, double tol = 1e-12);

// #{lambda <= e} / normalization
double counting(const Spectrum& s, double e, double normalization);
std::size_t count_at_most(std::span<const double> sorted, double e);

}  // namespace rbo
