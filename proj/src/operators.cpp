#include "rbo/operators.h"

#include <cmath>

#include <fmt/format.h>

namespace rbo {

namespace {

void require_same_dim(const SymMatrix& a, const SymMatrix& b, const char* what) {
  if (a.dim() != b.dim())
    throw DomainError(fmt::format("{}: dimension mismatch ({} vs {})", what, a.dim(), b.dim()));
}

DenseMatrix conjugate(const DenseMatrix& u, const DenseMatrix& m) { return u * m * u.transposed(); }

BlockMatrix split(const DenseMatrix& m, BlockMatrix::Shape shape) {
  const std::size_t n = m.rows() / 2;
  BlockMatrix out;
  out.top = SymMatrix::from_dense(m.block(0, 0, n, n), 1e-10);
  out.off = m.block(0, n, n, n);
  out.bottom = SymMatrix::from_dense(m.block(n, n, n, n), 1e-10);
  out.shape = shape;
  return out;
}

}  // namespace

std::string to_string(BoundaryMode mode) {
  switch (mode) {
    case BoundaryMode::Adjacency: return "adjacency";
    case BoundaryMode::Neumann: return "neumann";
    case BoundaryMode::Dirichlet: return "dirichlet";
  }
  return "unknown";
}

SymMatrix laplacian(const Cube& cube, BoundaryMode mode, int sign) {
  if (sign != 1 && sign != -1) throw DomainError("laplacian sign must be +1 or -1");
  const std::size_t n = cube.size();
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nb = cube.neighbours(i);
    for (auto k : nb)
      if (k > i) m.set(i, k, sign * 1.0);
    if (mode == BoundaryMode::Adjacency) continue;
    double diag = -static_cast<double>(nb.size());
    if (mode == BoundaryMode::Dirichlet) {
      const auto missing = 2 * cube.dim() - static_cast<int>(nb.size());
      diag -= 2.0 * missing;
    }
    m.set(i, i, sign * diag);
  }
  return m;
}

SymMatrix gamma(const Cube& cube) {
  SymMatrix m(cube.size());
  for (std::size_t i = 0; i < cube.size(); ++i)
    m.set(i, i, 2.0 * cube.dim() - static_cast<double>(cube.neighbours(i).size()));
  return m;
}

SymMatrix diag_op(std::span<const double> values, std::size_t expected_dim) {
  if (values.size() != expected_dim)
    throw DomainError(fmt::format("diag_op: expected {} values, got {}", expected_dim, values.size()));
  return SymMatrix::diagonal(values);
}

SymMatrix dwave_b(const Cube& cube, double beta, BoundaryMode mode) {
  if (cube.dim() != 2) throw DomainError(fmt::format("dwave_b requires d = 2, got d = {}", cube.dim()));
  const std::size_t n = cube.size();
  SymMatrix m(n);
  // axis 0 is x (sign +), axis 1 is y (sign -)
  for (int axis = 0; axis < 2; ++axis) {
    const double s = axis == 0 ? beta : -beta;
    for (std::size_t i = 0; i < n; ++i) {
      int inside = 0;
      std::size_t k = 0;
      if (cube.step(i, axis, -1, k)) ++inside;
      if (cube.step(i, axis, +1, k)) {
        ++inside;
        m.add(i, k, s);
      }
      if (mode == BoundaryMode::Adjacency) continue;
      double diag = -inside;
      if (mode == BoundaryMode::Dirichlet) diag -= 2.0 * (2 - inside);
      m.add(i, i, s * diag);
    }
  }
  return m;
}

SymMatrix BlockMatrix::to_dense() const {
  const std::size_t n = half();
  DenseMatrix m(2 * n, 2 * n);
  m.set_block(0, 0, top.dense());
  m.set_block(0, n, off);
  m.set_block(n, 0, off.transposed());
  m.set_block(n, n, bottom.dense());
  return SymMatrix::from_dense(m, 0.0);
}

BlockMatrix BlockMatrix::from_dense(const SymMatrix& m) {
  if (m.dim() % 2 != 0) throw DomainError("block split needs an even dimension");
  return split(m.dense(), Shape::General);
}

BlockMatrix assemble(const SymMatrix& h, const SymMatrix& b) {
  require_same_dim(h, b, "assemble");
  return BlockMatrix{h, b.dense(), -h, BlockMatrix::Shape::Standard};
}

BlockMatrix assemble_bracketing(const SymMatrix& h_top, const SymMatrix& h_bot, const SymMatrix& b) {
  require_same_dim(h_top, h_bot, "assemble_bracketing");
  require_same_dim(h_top, b, "assemble_bracketing");
  const auto shape = h_top == h_bot ? BlockMatrix::Shape::Standard : BlockMatrix::Shape::Bracketing;
  return BlockMatrix{h_top, b.dense(), -h_bot, shape};
}

BlockMatrix transform_u1(const BlockMatrix& m) {
  const std::size_t n = m.half();
  const double r = 1.0 / std::sqrt(2.0);
  DenseMatrix u(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    u(i, i) = r;
    u(i, n + i) = r;
    u(n + i, i) = r;
    u(n + i, n + i) = -r;
  }
  auto out = split(conjugate(u, m.to_dense().dense()), BlockMatrix::Shape::General);
  if (m.shape == BlockMatrix::Shape::Standard && out.off == out.off.transposed()) out.shape = m.shape;
  return out;
}

BlockMatrix transform_u2(const BlockMatrix& m) {
  const std::size_t n = m.half();
  DenseMatrix u(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    u(i, n + i) = 1.0;
    u(n + i, i) = -1.0;
  }
  auto out = split(conjugate(u, m.to_dense().dense()), BlockMatrix::Shape::General);
  out.shape = m.shape;
  return out;
}

ComplexSquareTransform transform_u3_square(const BlockMatrix& m) {
  if (m.shape != BlockMatrix::Shape::Standard) throw DomainError("transform_u3_square needs [[H,B],[B,-H]]");
  const std::size_t n = m.half();
  const double r = 1.0 / std::sqrt(2.0);
  // U3 = R + iJ, R = r*1, J = r*[[0,1],[1,0]]
  DenseMatrix rr(2 * n, 2 * n), jj(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    rr(i, i) = r;
    rr(n + i, n + i) = r;
    jj(i, n + i) = r;
    jj(n + i, i) = r;
  }
  const DenseMatrix full = m.to_dense().dense();
  const DenseMatrix sq = full * full;
  // (R + iJ) S (R - iJ) = RSR + JSJ + i (JSR - RSJ)
  ComplexSquareTransform out;
  out.re = rr * sq * rr + jj * sq * jj;
  out.im = jj * sq * rr - rr * sq * jj;

  out.off_block_norm = std::hypot(out.re.block(0, n, n, n).frobenius(), out.re.block(n, 0, n, n).frobenius(),
                                  std::hypot(out.im.block(0, n, n, n).frobenius(), out.im.block(n, 0, n, n).frobenius()));

  const DenseMatrix& h = m.top.dense();
  const DenseMatrix& b = m.off;
  const DenseMatrix p = h * h + b * b;
  const DenseMatrix c = h * b - b * h;
  out.k_minus_residual = std::max((out.re.block(0, 0, n, n) - p).max_abs(), (out.im.block(0, 0, n, n) + c).max_abs());
  out.k_plus_residual = std::max((out.re.block(n, n, n, n) - p).max_abs(), (out.im.block(n, n, n, n) - c).max_abs());
  return out;
}

ParityTransform transform_parity(const BlockMatrix& m, const Cube& cube, double tol) {
  const std::size_t n = m.half();
  if (cube.size() != n) throw DomainError("transform_parity: cube does not match block size");
  const auto par = parity_values(cube);
  const DenseMatrix u = SymMatrix::diagonal(par).dense();

  ParityTransform out;
  const DenseMatrix& h = m.top.dense();
  const DenseMatrix& b = m.off;
  const double scale = std::max({h.max_abs(), b.max_abs(), 1.0});
  out.anticommutator_norm = (h * u + u * h).frobenius();
  out.commutator_norm = (b * u - u * b).frobenius();
  out.precondition_holds = m.shape == BlockMatrix::Shape::Standard && out.anticommutator_norm <= tol * scale &&
                           out.commutator_norm <= tol * scale;

  const double r = 1.0 / std::sqrt(2.0);
  DenseMatrix w(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    w(i, i) = r;
    w(i, n + i) = r * par[i];
    w(n + i, i) = r;
    w(n + i, n + i) = -r * par[i];
  }
  const DenseMatrix conj = conjugate(w, m.to_dense().dense());
  out.off_block_norm = conj.block(0, n, n, n).frobenius();
  // Symmetrize with a loose tolerance: rounding in the triple product.
  DenseMatrix sym = conj;
  for (std::size_t i = 0; i < 2 * n; ++i)
    for (std::size_t j = i + 1; j < 2 * n; ++j) sym(i, j) = sym(j, i) = 0.5 * (conj(i, j) + conj(j, i));
  out.conjugated = split(sym, BlockMatrix::Shape::General);
  if (out.precondition_holds) out.blocks = std::make_pair(out.conjugated.top, out.conjugated.bottom);
  return out;
}

double square_identity_residual(const SymMatrix& h, const SymMatrix& b) {
  require_same_dim(h, b, "square_identity_residual");
  const std::size_t n = h.dim();
  const DenseMatrix full = assemble(h, b).to_dense().dense();
  const DenseMatrix sq = full * full;

  const DenseMatrix& hd = h.dense();
  const DenseMatrix& bd = b.dense();
  const DenseMatrix diag = hd * hd + bd * bd;
  const DenseMatrix comm = hd * bd - bd * hd;
  DenseMatrix expected(2 * n, 2 * n);
  expected.set_block(0, 0, diag);
  expected.set_block(0, n, comm);
  expected.set_block(n, 0, -1.0 * comm);
  expected.set_block(n, n, diag);
  return (sq - expected).frobenius();
}

}  // namespace rbo
