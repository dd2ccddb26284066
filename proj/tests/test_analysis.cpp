#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"
#include "oracles.h"
#include "rbo/analysis.h"

using namespace rbo;
using doctest::Approx;

namespace {

// D = Uniform{-2, 2}
DosTransform flat_transform(double beta) { return {DensitySpec::uniform(-2, 2), beta}; }

// Integral of the transformed density over [beta, sqrt(a^2 + beta^2)],
// substituting E = beta + t^2 to remove the edge singularity.
double transformed_mass(const DosTransform& t, double a, double kink) {
  const double beta = std::abs(t.beta);
  const double top = std::sqrt(a * a + beta * beta);
  const auto g = [&](double u) { return 2.0 * u * const_b_dos(t, beta + u * u).value; };
  const double tk = std::sqrt(std::max(0.0, std::min(top, kink) - beta));
  const double tt = std::sqrt(top - beta);
  double s = oracle::gauss_legendre(g, 0.0, tk, 2000);
  if (tt > tk) s += oracle::gauss_legendre(g, tk, tt, 2000);
  return s;
}

SymMatrix shifted_to(SymMatrix h, double lambda) {
  const double shift = lambda - eigvalsh(h).spectrum.values.front();
  for (std::size_t i = 0; i < h.dim(); ++i) h.add(i, i, shift);
  return h;
}

}  // namespace

TEST_CASE("constant-b spectral map") {
  const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0);
  Spectrum h{{-s2, 0, s2}, std::nullopt, BlockMatrix::Shape::General};
  const auto mapped = const_b_map(h, 1.0);
  CHECK(oracle::max_abs_diff(mapped.values, {-s3, -s3, -1, 1, s3, s3}) < 1e-15);
  const auto dense = eigvalsh(assemble(laplacian(Cube(1, 3, true), BoundaryMode::Adjacency, +1),
                                       SymMatrix::diagonal(std::vector<double>(3, 1.0))));
  CHECK(oracle::max_abs_diff(dense.spectrum.values, mapped.values) < 1e-13);

  CHECK(const_b_map(Spectrum{{3}, std::nullopt, {}}, 4).values == std::vector<double>{-5, 5});
  CHECK(const_b_map(Spectrum{{-2, 1}, std::nullopt, {}}, 0).values == std::vector<double>{-2, -1, 1, 2});

  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const auto hm = oracle::random_symmetric(12, rng, 2.0);
    const auto sh = eigvalsh(hm).spectrum;
    for (double beta : {0.3, 1.0, 2.5}) {
      const auto direct = eigvalsh(assemble(hm, SymMatrix::diagonal(std::vector<double>(12, beta)))).spectrum;
      const double scale = direct.norm();
      CHECK(oracle::max_abs_diff(direct.values, const_b_map(sh, beta).values) <= 1e-8 * scale);
    }
  }
}

TEST_CASE("constant-b density transform values") {
  const auto t = flat_transform(1.0);
  CHECK(const_b_dos(t, std::sqrt(2.0)).value == Approx(std::sqrt(2.0) / 2).epsilon(1e-14));
  CHECK(const_b_dos(t, -std::sqrt(2.0)).value == Approx(std::sqrt(2.0) / 2).epsilon(1e-14));
  for (double e : {-0.999, -0.5, 0.0, 0.3, 0.9999}) CHECK(const_b_dos(t, e).value == 0.0);
  const auto edge = const_b_dos(t, 1.0);
  CHECK(edge.infinite);
  CHECK(std::isinf(edge.value));
  CHECK(const_b_dos(t, -1.0).infinite);
  // beyond the transformed band
  CHECK(const_b_dos(t, 3.0).value == 0.0);
}

TEST_CASE("density transform preserves measure") {
  for (double beta : {0.5, 1.0}) {
    const auto t = flat_transform(beta);
    const double kink = std::sqrt(4 + beta * beta);
    for (double a : {0.25, 1.0, 1.7, 2.0, 3.0}) {
      // every eigenvalue E0 of H in [-a, a] produces one of the block in [beta, sqrt(a^2 + beta^2)]
      const double source = std::min(a, 2.0) / 2.0;
      CHECK(std::abs(transformed_mass(t, a, kink) - source) < 1e-6);
    }
  }
}

TEST_CASE("density transform edge singularity") {
  const auto t = flat_transform(1.0);
  // E = beta (1 + delta): D(E) sqrt(delta) -> beta / sqrt(2 beta^2) * 2 D(0) = 1 / (2 sqrt 2)
  const double limit = 1.0 / (2.0 * std::sqrt(2.0));
  double prev = 0;
  for (int k = 2; k <= 8; ++k) {
    const double delta = std::pow(10.0, -k);
    const double p = const_b_dos(t, 1.0 + delta).value * std::sqrt(delta);
    CHECK(std::isfinite(p));
    if (k >= 6) CHECK(std::abs(p - prev) / prev < 0.05);
    prev = p;
  }
  CHECK(prev == Approx(limit).epsilon(1e-6));
}

TEST_CASE("density transform from a histogram source") {
  const auto h = make_histogram({-0.5, -0.25, 0.25, 0.5}, 0.5);
  DosTransform t{h, 1.0};
  const double s = 0.3;
  const double e = std::hypot(1.0, s);
  CHECK(const_b_dos(t, e).value == Approx(e / s * (h.at(s) + h.at(-s))));
}

TEST_CASE("wegner bound values") {
  CHECK(wegner_bound({WegnerBound::Mode::H, 1.0, 2.0}, 2.0) == 12.0);
  CHECK(wegner_bound({WegnerBound::Mode::H, 0.5, 3.0}, 0.0) == 12.0);
  CHECK(wegner_bound({WegnerBound::Mode::B, 0.5, 2.0}, 1.0) == 16.0);
  for (double e : {0.1, 1.7, 25.0}) {
    WegnerBound b{WegnerBound::Mode::H, 0.7, 1.3};
    CHECK(wegner_bound(b, e) == wegner_bound(b, -e));
  }
}

TEST_CASE("wegner certification") {
  ExperimentConfig cfg;
  cfg.cube = Cube(1, 21, true);
  cfg.disorder = {DensitySpec::uniform(1, 2), DensitySpec::uniform(-0.5, 0.5)};
  const auto b = certify_wegner(cfg, WegnerBound::Mode::H);
  // the Gershgorin lower edge of -Delta_N and -Delta_D is 0
  CHECK(b.lower == Approx(1.0));
  CHECK(b.bv == Approx(2.0));
  CHECK_THROWS_AS(certify_wegner(cfg, WegnerBound::Mode::B), HypothesisError);

  cfg.disorder.mu_b = DensitySpec::uniform(0.5, 1.5);
  CHECK(certify_wegner(cfg, WegnerBound::Mode::B).lower == Approx(0.5));
  cfg.disorder.mu_b = DensitySpec::point(1.0);
  CHECK_THROWS_AS(certify_wegner(cfg, WegnerBound::Mode::B), HypothesisError);

  cfg.disorder.mu_v = DensitySpec::uniform(-0.2, 2);
  CHECK_THROWS_AS(certify_wegner(cfg, WegnerBound::Mode::H), HypothesisError);
  cfg.laplacian_sign = +1;
  cfg.disorder.mu_v = DensitySpec::uniform(1, 2);
  CHECK_THROWS_AS(certify_wegner(cfg, WegnerBound::Mode::H), HypothesisError);
}

TEST_CASE("wegner check on a small ensemble") {
  ExperimentConfig cfg;
  cfg.cube = Cube(1, 41, true);
  cfg.disorder = {DensitySpec::uniform(1, 2), DensitySpec::uniform(-0.5, 0.5)};
  cfg.realizations = 100;
  cfg.seed = SeedPolicy{5};
  const auto res = run_ensemble(cfg);
  const auto bound = certify_wegner(cfg, WegnerBound::Mode::H);
  const auto report = wegner_check(res.dos, bound);
  CHECK(report.passed());
  CHECK(report.bins_checked > 0);

  // the bound does not depend on b
  cfg.disorder.mu_b = DensitySpec::point(0.7);
  CHECK(wegner_check(run_ensemble(cfg).dos, certify_wegner(cfg, WegnerBound::Mode::H)).passed());

  // a bound a thousand times too small is violated
  WegnerBound wrong = bound;
  wrong.lower *= 1000;
  const auto bad = wegner_check(res.dos, wrong);
  CHECK_FALSE(bad.passed());

  std::ostringstream os;
  write_wegner_json(os, bad, res.dos);
  const auto doc = nlohmann::json::parse(os.str());
  CHECK(doc["passed"] == false);
  CHECK(doc["violations"].size() == bad.violations.size());
  CHECK(doc["bins"].size() == res.dos.bins());

  CHECK_THROWS_AS(wegner_check(res.dos, WegnerBound{WegnerBound::Mode::H, 0.0, 2.0}), HypothesisError);
}

TEST_CASE("feynman-hellmann closed form") {
  const auto block = assemble(SymMatrix::diagonal(std::vector<double>{3}), SymMatrix::diagonal(std::vector<double>{4}));
  const auto spec = eigvalsh(block, {.want_vectors = true}).spectrum;
  const auto fh = feynman_hellmann_sum(block, spec, 1);
  CHECK_FALSE(fh.skipped);
  CHECK(fh.lhs == Approx(3).epsilon(1e-14));
  CHECK(fh.rhs == Approx(3).epsilon(1e-14));
  // eigenvector of E = 5 is (2, 1)/sqrt 5 up to sign
  CHECK(std::abs((*spec.vectors)(0, 1)) == Approx(2 / std::sqrt(5.0)));

  // b = 0: eigenvectors live in one component
  const auto h = SymMatrix::diagonal(std::vector<double>{1.0, 2.5});
  const auto dec = assemble(h, SymMatrix(2));
  const auto ds = eigvalsh(dec, {.want_vectors = true}).spectrum;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto r = feynman_hellmann_sum(dec, ds, k);
    CHECK(r.lhs == Approx(r.rhs));
    CHECK(std::abs(r.lhs) == Approx(std::abs(ds.values[k])));
  }
}

TEST_CASE("feynman-hellmann on random gapped instances") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng() % 15;
    const auto h = shifted_to(oracle::random_symmetric(n, rng), 0.2);
    const auto b = SymMatrix::diagonal(oracle::random_vector(n, rng, -1, 1));
    const auto block = assemble(h, b);
    const auto spec = eigvalsh(block, {.want_vectors = true}).spectrum;
    for (std::size_t k = 0; k < spec.size(); ++k) {
      const auto r = feynman_hellmann_sum(block, spec, k);
      if (r.skipped) continue;
      CHECK(std::abs(r.lhs - r.rhs) <= 1e-8 * spec.norm());
      CHECK(r.rhs >= r.min_eig_h - 1e-8);
    }
  }
}

TEST_CASE("eigenvalue derivative matches finite differences") {
  std::mt19937_64 rng(44);
  const std::size_t n = 16;
  const auto h0 = shifted_to(oracle::random_symmetric(n, rng), 0.3);
  const auto b = SymMatrix::diagonal(oracle::random_vector(n, rng, -1, 1));
  const auto spec = eigvalsh(assemble(h0, b), {.want_vectors = true}).spectrum;
  const double step = 1e-6;
  for (std::size_t k : {std::size_t{0}, n - 1, n, 2 * n - 1}) {
    const auto grad = eigenvalue_potential_derivative(spec, k);
    for (std::size_t j = 0; j < n; ++j) {
      auto hp = h0, hm = h0;
      hp.add(j, j, step);
      hm.add(j, j, -step);
      const double ep = eigvalsh(assemble(hp, b)).spectrum.values[k];
      const double em = eigvalsh(assemble(hm, b)).spectrum.values[k];
      CHECK(std::abs((ep - em) / (2 * step) - grad[j]) < 1e-4);
    }
  }
}

TEST_CASE("feynman-hellmann guards") {
  const auto block = assemble(SymMatrix::diagonal(std::vector<double>{1, 1}), SymMatrix(2));
  const auto spec = eigvalsh(block, {.want_vectors = true}).spectrum;
  CHECK(feynman_hellmann_sum(block, spec, 0).skipped);
  CHECK_THROWS_AS(feynman_hellmann_sum(block, eigvalsh(block).spectrum, 0), DomainError);
  SymMatrix offdiag(2);
  offdiag.set(0, 1, 0.5);
  const auto nd = assemble(SymMatrix::diagonal(std::vector<double>{1, 2}), offdiag);
  CHECK_THROWS_AS(feynman_hellmann_sum(nd, eigvalsh(nd, {.want_vectors = true}).spectrum, 0), DomainError);
}

TEST_CASE("bounded-variation inequality") {
  const auto phi = DensitySpec::uniform(-1, 1);
  const auto r = bv_inequality_probe(tanh_step(1.0), phi);
  // F(1) - F(-1) = tanh(1), times the density height 1/2
  CHECK(r.lhs == Approx(0.5 * std::tanh(1.0)).epsilon(1e-10));
  CHECK(r.rhs == Approx(1.0));
  CHECK(r.lhs <= r.rhs + 1e-8);

  const auto shifted = bv_inequality_probe(tanh_step(1.0, 0.0, 0.3), phi);
  CHECK(shifted.lhs < shifted.rhs);

  for (double a : {1e-3, 0.1, 5.0}) CHECK(bv_inequality_probe(tanh_step(a), phi).lhs == Approx(a * r.lhs).epsilon(1e-9));

  const DensitySpec steps(PiecewiseConstant{{-1, 0, 0.5, 2}, {0.2, 0.8, 0.4 / 1.5}});
  const auto f = tanh_step(2.0, 0.4, 0.5);
  const auto p = bv_inequality_probe(f, steps);
  double exact = 0;
  const double bp[4] = {-1, 0, 0.5, 2}, ht[3] = {0.2, 0.8, 0.4 / 1.5};
  for (int k = 0; k < 3; ++k) exact += ht[k] * (f.value(bp[k + 1]) - f.value(bp[k]));
  CHECK(p.lhs == Approx(std::abs(exact)).epsilon(1e-10));
  CHECK(p.lhs <= p.rhs + 1e-8);

  CHECK_THROWS_AS(bv_inequality_probe(f, DensitySpec::point(0)), DomainError);
  CHECK_THROWS_AS(adaptive_simpson([](double x) { return 1.0 / x; }, 0.0, 1.0, 1e-12, 10), NumericalError);
}

TEST_CASE("lifshits length scale") {
  LifshitsRun run;
  CHECK(run.length(0.25, 1) == 8);
  CHECK(run.length(0.05, 1) == 18);
  std::int64_t prev = 0;
  for (double e : {0.4, 0.3, 0.2, 0.15, 0.1, 0.07, 0.05}) {
    const auto l = run.length(e, 1);
    CHECK(l >= prev);
    prev = l;
  }
  CHECK_THROWS_AS(run.length(0.0, 1), DomainError);
}

TEST_CASE("lifshits probe") {
  ExperimentConfig base;
  base.cube = Cube(1, 1);
  base.disorder.mu_v = DensitySpec::uniform(0.5, 1.5);
  base.seed = SeedPolicy{17};
  LifshitsRun run;
  run.epsilons = {6.0, 0.4, 0.2, 0.1};
  run.realizations = 300;
  const auto t = lifshits_probe(run, base);
  CHECK(t.lambda == 0.5);
  REQUIRE(t.rows.size() == 4);
  // eps >= w + ||Delta_N|| = 1 + 4
  CHECK(t.rows[0].p_hat == 1.0);
  for (std::size_t i = 1; i < t.rows.size(); ++i)
    CHECK(t.rows[i].p_hat <= t.rows[i - 1].p_hat + 2 * std::hypot(t.rows[i].stderr_, t.rows[i - 1].stderr_));

  // reproducible
  const auto again = lifshits_probe(run, base);
  for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(again.rows[i].hits == t.rows[i].hits);

  // d = 2 goes through the dense solver
  base.cube = Cube(2, 1);
  run.epsilons = {8.0, 0.5};
  run.realizations = 20;
  CHECK(lifshits_probe(run, base).rows[0].p_hat == 1.0);

  base.disorder.mu_v = DensitySpec::uniform(-0.5, 0.5);
  CHECK_THROWS_AS(lifshits_probe(run, base), HypothesisError);
  base.disorder.mu_v = DensitySpec::uniform(0.5, 1.5);
  run.epsilons = {0.1, 0.2};
  CHECK_THROWS_AS(lifshits_probe(run, base), DomainError);
}

TEST_CASE("lifshits exponent fit") {
  const auto synthetic = [](double gamma, std::vector<double> eps) {
    LifshitsTable t;
    for (double e : eps) t.rows.push_back({e, 1, 1, 0, std::exp(-gamma * std::pow(e, -0.5)), 0});
    return t;
  };
  const auto exact = lifshits_exponent_fit(synthetic(1.0, {0.4, 0.3, 0.2, 0.15, 0.1, 0.07, 0.05}));
  CHECK(std::abs(exact.alpha - 0.5) < 1e-6);
  CHECK(exact.jackknife_stderr < 1e-6);
  CHECK(exact.points == 7);

  const auto scaled = lifshits_exponent_fit(synthetic(3.0, {0.1, 0.07, 0.05, 0.03, 0.02, 0.01}));
  CHECK(std::abs(scaled.alpha - 0.5) < 0.05);

  LifshitsTable sparse = synthetic(1.0, {0.4, 0.3, 0.2});
  sparse.rows.push_back({0.1, 1, 1, 0, 0.0, 0});
  sparse.rows.push_back({0.05, 1, 1, 0, 1.0, 0});
  CHECK_THROWS_AS(lifshits_exponent_fit(sparse), DomainError);

  std::ostringstream os;
  write_lifshits_csv(os, sparse);
  CHECK(os.str().find("epsilon,L_eps,R,p_hat,stderr,ln_eps,lnln\n") != std::string::npos);
  // zero probability leaves the double log empty
  CHECK(os.str().find(",0,0,-2.3025850929940455,\n") != std::string::npos);
}

TEST_CASE("spectrum inclusion") {
  std::mt19937_64 rng(45);
  const auto h = oracle::random_symmetric(20, rng);
  const auto sh = eigvalsh(h).spectrum;
  const auto block = eigvalsh(assemble(h, SymMatrix::diagonal(std::vector<double>(20, 0.8)))).spectrum;
  const std::vector<double> energies{-1.0, 0.0, 0.7};
  const std::vector<double> betas{0.8};
  CHECK(spectrum_inclusion_check(sh, block, energies, betas).max_distance < 1e-12);

  const auto decoupled = eigvalsh(assemble(h, SymMatrix(20))).spectrum;
  const std::vector<double> zero{0.0};
  const auto r = spectrum_inclusion_check(sh, decoupled, energies, zero);
  CHECK(r.max_distance < 1e-12);
  CHECK(r.distances.size() == 3);
}

TEST_CASE("spectrum inclusion distance shrinks with L") {
  const std::vector<double> energies{0.5, 1.5, 2.5};
  const std::vector<double> betas{0.6, 0.8};
  double previous = INFINITY;
  for (std::int64_t L : {101, 401, 1601}) {
    ExperimentConfig cfg;
    cfg.cube = Cube(1, L, true);
    cfg.disorder = {DensitySpec::uniform(0, 1), DensitySpec::uniform(0.6, 0.8)};
    cfg.seed = SeedPolicy{46};
    const auto real = sample_realization(cfg, 0);
    const auto h = build_hamiltonian(cfg, BoundaryMode::Neumann, real.v);
    const auto sh = eigvalsh(h).spectrum;
    const auto sb = eigvalsh(assemble(h, SymMatrix::diagonal(real.b))).spectrum;
    const auto r = spectrum_inclusion_check(sh, sb, energies, betas);
    CAPTURE(L);
    CHECK(r.max_distance <= previous);
    previous = r.max_distance;
  }
}
