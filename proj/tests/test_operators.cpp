#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.h"
#include "rbo/eigen.h"
#include "rbo/operators.h"

using namespace rbo;
using doctest::Approx;

namespace {

std::vector<double> evals(const SymMatrix& m) { return eigvalsh(m).spectrum.values; }
std::vector<double> evals(const BlockMatrix& m) { return eigvalsh(m).spectrum.values; }

}  // namespace

TEST_CASE("adjacency laplacian on a path") {
  const auto a = laplacian(Cube(1, 3, true), BoundaryMode::Adjacency, +1);
  CHECK(a(0, 1) == 1);
  CHECK(a(1, 2) == 1);
  CHECK(a(0, 2) == 0);
  CHECK(a(1, 1) == 0);
  const auto ev = evals(a);
  CHECK(ev[0] == Approx(-std::sqrt(2.0)).epsilon(1e-14));
  CHECK(std::abs(ev[1]) < 1e-14);
  CHECK(ev[2] == Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("neumann laplacian is the graph laplacian") {
  const auto n = laplacian(Cube(1, 3, true), BoundaryMode::Neumann, -1);
  const double expected[3][3] = {{1, -1, 0}, {-1, 2, -1}, {0, -1, 1}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(n(i, j) == expected[i][j]);
  CHECK(std::abs(evals(n)[0]) < 1e-14);
  // sign flips the whole matrix
  CHECK(laplacian(Cube(1, 3, true), BoundaryMode::Neumann, +1) == -n);
}

TEST_CASE("dirichlet minus neumann is twice gamma") {
  for (int d = 1; d <= 3; ++d)
    for (std::int64_t L : {1, 2, 3, 4}) {
      Cube c(d, L);
      const auto diff = laplacian(c, BoundaryMode::Dirichlet, -1) - laplacian(c, BoundaryMode::Neumann, -1);
      CHECK(diff == 2.0 * gamma(c));
    }
  const auto g = gamma(Cube(1, 3, true));
  CHECK(g.diag() == std::vector<double>{1, 0, 1});
}

TEST_CASE("gamma examples") {
  CHECK(gamma(Cube(1, 1)).diag() == std::vector<double>{2});
  CHECK(gamma(Cube(2, 3)).diag() == std::vector<double>{2, 1, 2, 1, 0, 1, 2, 1, 2});
  CHECK(gamma(Cube(2, 3)).is_diagonal());
}

TEST_CASE("diag_op") {
  const std::vector<double> v{1, 2, 3};
  const auto m = diag_op(v, 3);
  CHECK(m.diag() == v);
  CHECK(m.is_diagonal());
  CHECK(diag_op(std::vector<double>(4, 0.0), 4) == SymMatrix(4));
  CHECK(diag_op(parity_values(Cube(1, 3, true)), 3).diag() == std::vector<double>{-1, 1, -1});
  CHECK_THROWS_AS(diag_op(v, 4), DomainError);
}

TEST_CASE("d-wave pairing block") {
  CHECK(dwave_b(Cube(2, 4), 0.0) == SymMatrix(16));
  CHECK(dwave_b(Cube(2, 1), 1.0) == SymMatrix(1));
  CHECK_THROWS_AS(dwave_b(Cube(1, 3), 1.0), DomainError);
  CHECK_THROWS_AS(dwave_b(Cube(3, 2), 1.0), DomainError);

  Cube c(2, 3);
  const auto b = dwave_b(c, 1.0);
  CHECK(b.dense().max_row_sum() <= 4.0);
  // x-bonds carry +beta, y-bonds -beta
  CHECK(b(c.index_of({0, 0}), c.index_of({1, 0})) == 1.0);
  CHECK(b(c.index_of({0, 0}), c.index_of({0, 1})) == -1.0);
  CHECK(b.trace() == 0.0);
  // Neumann variant: x and y diagonal terms cancel where both axes see the
  // same number of neighbours
  const auto bn = dwave_b(c, 1.0, BoundaryMode::Neumann);
  CHECK(bn(0, 0) == 0.0);
  CHECK(bn(4, 4) == 0.0);
  CHECK(bn(1, 1) == 1.0);
}

TEST_CASE("assemble") {
  const auto m = assemble(SymMatrix::diagonal(std::vector<double>{3}), SymMatrix::diagonal(std::vector<double>{4}));
  const auto ev = evals(m);
  CHECK(ev[0] == Approx(-5).epsilon(1e-14));
  CHECK(ev[1] == Approx(5).epsilon(1e-14));
  CHECK(m.shape == BlockMatrix::Shape::Standard);

  std::mt19937_64 rng(11);
  const auto h = oracle::random_symmetric(6, rng);
  auto h_ev = evals(h);
  std::vector<double> expected = h_ev;
  for (double x : h_ev) expected.push_back(-x);
  std::sort(expected.begin(), expected.end());
  CHECK(oracle::max_abs_diff(evals(assemble(h, SymMatrix(6))), expected) < 1e-12);

  const std::vector<double> b{0.5, -2.0, 1.5};
  const auto hb = evals(assemble(SymMatrix(3), SymMatrix::diagonal(b)));
  CHECK(oracle::max_abs_diff(hb, {-2.0, -1.5, -0.5, 0.5, 1.5, 2.0}) < 1e-14);

  CHECK_THROWS_AS(assemble(SymMatrix(2), SymMatrix(3)), DomainError);
}

TEST_CASE("assemble_bracketing") {
  std::mt19937_64 rng(5);
  const auto h = oracle::random_symmetric(4, rng);
  const auto b = SymMatrix::diagonal(oracle::random_vector(4, rng, -1, 1));
  const auto same = assemble_bracketing(h, h, b);
  CHECK(same.to_dense() == assemble(h, b).to_dense());
  CHECK(same.shape == BlockMatrix::Shape::Standard);

  const auto plus = assemble_bracketing(SymMatrix::diagonal(std::vector<double>{3}),
                                        SymMatrix::diagonal(std::vector<double>{2}),
                                        SymMatrix::diagonal(std::vector<double>{1}));
  const auto d = plus.to_dense();
  CHECK(d(0, 0) == 3);
  CHECK(d(0, 1) == 1);
  CHECK(d(1, 0) == 1);
  CHECK(d(1, 1) == -2);
  CHECK(plus.shape == BlockMatrix::Shape::Bracketing);
  CHECK_THROWS_AS(assemble_bracketing(SymMatrix(2), SymMatrix(3), SymMatrix(2)), DomainError);
}

TEST_CASE("U1 swaps diagonal and off-diagonal blocks") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const auto h = oracle::random_symmetric(5, rng);
    const auto b = oracle::random_symmetric(5, rng);
    const auto m = assemble(h, b);
    const auto t = transform_u1(m);
    CHECK((t.top - b).dense().max_abs() < 1e-14);
    CHECK((t.off - h.dense()).max_abs() < 1e-14);
    CHECK((t.bottom + b).dense().max_abs() < 1e-14);
    CHECK(oracle::max_abs_diff(evals(m), evals(t)) < 1e-12);
  }
}

TEST_CASE("U2 negates the block operator") {
  std::mt19937_64 rng(8);
  const auto h = oracle::random_symmetric(6, rng);
  const auto b = oracle::random_symmetric(6, rng);
  const auto m = assemble(h, b);
  const auto t = transform_u2(m);
  CHECK((t.to_dense() + m.to_dense()).dense().max_abs() < 1e-14);
  const auto ev = evals(m);
  const auto et = evals(t);
  for (std::size_t k = 0; k < ev.size(); ++k) CHECK(std::abs(et[k] + ev[ev.size() - 1 - k]) < 1e-12);
}

TEST_CASE("U3 block-diagonalizes the square") {
  std::mt19937_64 rng(9);
  const auto h = oracle::random_symmetric(5, rng);
  const auto b = oracle::random_symmetric(5, rng);
  const auto t = transform_u3_square(assemble(h, b));
  CHECK(t.off_block_norm < 1e-12);
  CHECK(t.k_minus_residual < 1e-12);
  CHECK(t.k_plus_residual < 1e-12);
  // K_+ and K_- are Hermitian: real part symmetric, imaginary antisymmetric
  const std::size_t n = 5;
  const auto im = t.im.block(n, n, n, n);
  CHECK((im + im.transposed()).max_abs() < 1e-12);
  CHECK_THROWS_AS(transform_u3_square(assemble_bracketing(h, h + h, b)), DomainError);
}

TEST_CASE("parity transform on the three-site chain") {
  Cube c(1, 3, true);
  const auto delta = laplacian(c, BoundaryMode::Adjacency, +1);
  const auto one = SymMatrix::diagonal(std::vector<double>(3, 1.0));
  const auto m = assemble(delta, one);
  const auto p = transform_parity(m, c);
  REQUIRE(p.precondition_holds);
  REQUIRE(p.blocks);
  CHECK(p.off_block_norm < 1e-14);

  // blocks match Delta +- U b built directly
  const auto u = SymMatrix::diagonal(parity_values(c));
  CHECK((p.blocks->first - (delta + u)).dense().max_abs() < 1e-14);
  CHECK((p.blocks->second - (delta - u)).dense().max_abs() < 1e-14);

  std::vector<double> uni = evals(p.blocks->first);
  const auto second = evals(p.blocks->second);
  uni.insert(uni.end(), second.begin(), second.end());
  std::sort(uni.begin(), uni.end());
  const double s3 = std::sqrt(3.0);
  CHECK(oracle::max_abs_diff(uni, {-s3, -s3, -1, 1, s3, s3}) < 1e-13);
  CHECK(oracle::max_abs_diff(evals(m), uni) < 1e-13);
  // characteristic polynomial -(1 + x)(x^2 - 3) of Delta + U
  for (double x : evals(p.blocks->first)) {
    const double det = -(1 + x) * (x * x - 3);
    CHECK(std::abs(det) < 1e-12);
  }
}

TEST_CASE("parity transform reports the neumann precondition failure") {
  Cube c(1, 5, true);
  const auto m = assemble(laplacian(c, BoundaryMode::Neumann, -1), SymMatrix::diagonal(std::vector<double>(5, 0.7)));
  const auto p = transform_parity(m, c);
  CHECK_FALSE(p.precondition_holds);
  CHECK_FALSE(p.blocks);
  CHECK(p.anticommutator_norm > 1.0);
  CHECK(p.off_block_norm > 1e-3);
}

TEST_CASE("square identity residual") {
  std::mt19937_64 rng(3);
  const auto hd = SymMatrix::diagonal(oracle::random_vector(6, rng, -2, 2));
  const auto bd = SymMatrix::diagonal(oracle::random_vector(6, rng, -2, 2));
  CHECK(square_identity_residual(hd, bd) <= 1e-12 * 16);

  for (int trial = 0; trial < 10; ++trial) {
    const auto h = oracle::random_symmetric(8, rng);
    const auto b = oracle::random_symmetric(8, rng);
    const double scale = evals(h).back() - evals(h).front() + evals(b).back() - evals(b).front();
    CHECK(square_identity_residual(h, b) <= 1e-12 * scale * scale);
  }

  // B = 0: square is diag(H^2, H^2)
  const auto h = oracle::random_symmetric(4, rng);
  const auto full = assemble(h, SymMatrix(4)).to_dense().dense();
  const auto sq = full * full;
  const auto h2 = h.dense() * h.dense();
  CHECK((sq.block(0, 0, 4, 4) - h2).max_abs() < 1e-14);
  CHECK((sq.block(4, 4, 4, 4) - h2).max_abs() < 1e-14);
  CHECK(sq.block(0, 4, 4, 4).max_abs() == 0.0);
}

TEST_CASE("property: block spectrum is symmetric and bounded") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    const auto h = oracle::random_symmetric(n, rng, 2.0);
    const auto b = oracle::random_symmetric(n, rng, 1.0);
    const auto ev = evals(assemble(h, b));
    const double hn = std::max(std::abs(evals(h).front()), std::abs(evals(h).back()));
    const double bn = std::max(std::abs(evals(b).front()), std::abs(evals(b).back()));
    const double scale = hn + bn;
    for (std::size_t k = 0; k < ev.size(); ++k) CHECK(std::abs(ev[k] + ev[ev.size() - 1 - k]) <= 1e-12 * scale);
    CHECK(ev.back() <= scale * (1 + 1e-12));
    CHECK(ev.front() >= -scale * (1 + 1e-12));
  }
}

TEST_CASE("property: gap bounds") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    const double lambda = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    const double beta = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    auto h = oracle::random_symmetric(n, rng);
    const double shift = lambda - evals(h).front();
    for (std::size_t i = 0; i < n; ++i) h.add(i, i, shift);
    const auto b = SymMatrix::diagonal(oracle::random_vector(n, rng, beta, beta + 1));
    const auto ev = evals(assemble(h, b));
    double gap = INFINITY;
    for (double x : ev) gap = std::min(gap, std::abs(x));
    CHECK(gap >= std::hypot(lambda, beta) - 1e-9);

    auto h1 = h;
    for (std::size_t i = 0; i < n; ++i) h1.add(i, i, std::uniform_real_distribution<double>(0, 1)(rng));
    for (double x : evals(assemble_bracketing(h, h1, b))) CHECK(std::abs(x) >= lambda - 1e-9);
  }
}

TEST_CASE("triplet export") {
  std::ostringstream os;
  write_triplets(os, laplacian(Cube(1, 2), BoundaryMode::Neumann, -1).dense());
  CHECK(os.str() == "# rows=2 cols=2 format=row col value (zero-based)\n0 0 1\n0 1 -1\n1 0 -1\n1 1 1\n");
}
