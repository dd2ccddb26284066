// Lattice Hamiltonians and the 2x2 block operators built from them.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>

#include "rbo/lattice.h"
#include "rbo/matrix.h"

namespace rbo {

// Adjacency: nearest-neighbour hopping truncated to the cube, no diagonal.
// Neumann: graph Laplacian. Dirichlet: Neumann shifted by twice the
// boundary deficiency.
enum class BoundaryMode { Adjacency, Neumann, Dirichlet };

std::string to_string(BoundaryMode mode);

// With sign = +1 the result is the "Delta" convention:
//   Adjacency  ->  A
//   Neumann    ->  A - deg
//   Dirichlet  ->  A - deg - 2*Gamma
// sign = -1 negates it, giving the positive semidefinite -Delta_N and
// -Delta_D = -Delta_N + 2*Gamma.
SymMatrix laplacian(const Cube& cube, BoundaryMode mode, int sign = -1);

// Diagonal of boundary deficiencies.
SymMatrix gamma(const Cube& cube);

SymMatrix diag_op(std::span<const double> values, std::size_t expected_dim);

// beta * (Delta_x - Delta_y) on a square, each one-dimensional Laplacian
// truncated according to `mode` (with the sign = +1 convention).
SymMatrix dwave_b(const Cube& cube, double beta, BoundaryMode mode = BoundaryMode::Adjacency);

// [[top, off], [off^T, bottom]]. The standard assembly has bottom = -top and
// a symmetric off-diagonal block.
struct BlockMatrix {
  enum class Shape { Standard, Bracketing, General };

  SymMatrix top;
  DenseMatrix off;
  SymMatrix bottom;
  Shape shape = Shape::General;

  std::size_t half() const { return top.dim(); }
  std::size_t dim() const { return 2 * top.dim(); }
  SymMatrix to_dense() const;

  // Splits a symmetric 2n x 2n matrix into blocks, shape General.
  static BlockMatrix from_dense(const SymMatrix& m);
};

BlockMatrix assemble(const SymMatrix& h, const SymMatrix& b);

// [[h_top, b], [b, -h_bot]].
BlockMatrix assemble_bracketing(const SymMatrix& h_top, const SymMatrix& h_bot, const SymMatrix& b);

// Explicit dense conjugations. Each builds the unitary as a matrix and
// forms U M U^T.

// U1 = (1/sqrt2)[[1,1],[1,-1]].
BlockMatrix transform_u1(const BlockMatrix& m);
// U2 = [[0,1],[-1,0]].
BlockMatrix transform_u2(const BlockMatrix& m);

// U3 = (1/sqrt2)[[1,i],[i,1]] applied to M^2 for a standard block M. The
// conjugated matrix is complex; real and imaginary parts are returned.
struct ComplexSquareTransform {
  DenseMatrix re;
  DenseMatrix im;
  // Frobenius norm of the off-diagonal n x n blocks.
  double off_block_norm = 0.0;
  // max-norm distance of the diagonal blocks from H^2+B^2 -/+ i[H,B].
  double k_minus_residual = 0.0;
  double k_plus_residual = 0.0;
};
ComplexSquareTransform transform_u3_square(const BlockMatrix& m);

// Conjugation by (1/sqrt2)[[1,U],[1,-U]] with U the site parity. Valid when
// H U + U H = 0 and [B, U] = 0.
struct ParityTransform {
  BlockMatrix conjugated;
  bool precondition_holds = false;
  double anticommutator_norm = 0.0;  // ||HU + UH||_F
  double commutator_norm = 0.0;      // ||BU - UB||_F
  double off_block_norm = 0.0;
  // Diagonal blocks H + UB and H - UB of the conjugated matrix; set only if
  // the precondition holds.
  std::optional<std::pair<SymMatrix, SymMatrix>> blocks;
};
ParityTransform transform_parity(const BlockMatrix& m, const Cube& cube, double tol = 1e-12);

// ||M^2 - [[H^2+B^2, HB-BH], [BH-HB, H^2+B^2]]||_F with M = assemble(H, B).
double square_identity_residual(const SymMatrix& h, const SymMatrix& b);

}  // namespace rbo
