#include "rbo/verify.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "rbo/analysis.h"
#include "rbo/parallel.h"

namespace rbo {

namespace {

double draw(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }
std::int64_t draw_int(CounterRng& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

std::vector<double> draws(CounterRng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = draw(rng, lo, hi);
  return v;
}

SymMatrix plus_diag(SymMatrix m, const std::vector<double>& v) {
  for (std::size_t i = 0; i < m.dim(); ++i) m.add(i, i, v[i]);
  return m;
}

// -Delta_D as the code under test builds it.
SymMatrix dirichlet_under_test(const Cube& c, Fault fault) {
  if (fault == Fault::NegatedGamma) return laplacian(c, BoundaryMode::Neumann, -1) - 2.0 * gamma(c);
  return laplacian(c, BoundaryMode::Dirichlet, -1);
}

// -Delta_D from coordinates alone: 2d + (faces touched) on the diagonal.
SymMatrix dirichlet_reference(const Cube& c) {
  const auto s = sites(c);
  const std::int64_t lo = c.origin(), hi = c.origin() + c.side() - 1;
  SymMatrix m(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    double diag = 2.0 * c.dim();
    for (auto x : s[i]) diag += (x == lo ? 1 : 0) + (x == hi ? 1 : 0);
    m.set(i, i, diag);
    for (std::size_t k = i + 1; k < s.size(); ++k) {
      std::int64_t dist = 0;
      for (int a = 0; a < c.dim(); ++a) dist += std::abs(s[i][a] - s[k][a]);
      if (dist == 1) m.set(i, k, -1.0);
    }
  }
  return m;
}

Cube random_cube(CounterRng& rng, std::int64_t max1, std::int64_t max2) {
  const int d = rng.uniform() < 0.5 ? 1 : 2;
  return Cube(d, draw_int(rng, 1, d == 1 ? max1 : max2), rng.uniform() < 0.5);
}

double spread(const std::vector<double>& sorted) {
  return sorted.empty() ? 0.0 : std::max(std::abs(sorted.front()), std::abs(sorted.back()));
}

struct Outcome {
  double defect = 0.0;  // normalized; fails if > 1
  std::string detail;
};

using Instance = std::function<Outcome(CounterRng&, Fault)>;

Outcome symmetry(CounterRng& rng, Fault fault) {
  const Cube c = random_cube(rng, 40, 7);
  const auto v = draws(rng, c.size(), -2, 2);
  const auto b = draws(rng, c.size(), -1, 1);
  const bool dir = rng.uniform() < 0.5;
  const SymMatrix h = plus_diag(dir ? dirichlet_under_test(c, fault) : laplacian(c, BoundaryMode::Neumann), v);
  const auto s = eigvalsh(assemble(h, SymMatrix::diagonal(b))).spectrum;
  const double tol = 1e-9 * s.norm();
  const double r = symmetry_residual(s);
  return {tol > 0 ? r / tol : 0.0, fmt::format("d={} L={} {} residual {:.3e}", c.dim(), c.side(), dir ? "D" : "N", r)};
}

Outcome square_identity(CounterRng& rng, Fault fault) {
  const Cube c = random_cube(rng, 20, 5);
  const auto v = draws(rng, c.size(), -1, 1);
  const auto b = SymMatrix::diagonal(draws(rng, c.size(), -1, 1));
  const SymMatrix h_sut = plus_diag(dirichlet_under_test(c, fault), v);
  const SymMatrix h_ref = plus_diag(dirichlet_reference(c), v);
  const auto m = assemble(h_sut, b).to_dense().dense();
  const auto sq = m * m;
  const auto& hd = h_ref.dense();
  const auto& bd = b.dense();
  const auto diag = hd * hd + bd * bd;
  const auto comm = hd * bd - bd * hd;
  const std::size_t n = c.size();
  DenseMatrix expect(2 * n, 2 * n);
  expect.set_block(0, 0, diag);
  expect.set_block(0, n, comm);
  expect.set_block(n, 0, -1.0 * comm);
  expect.set_block(n, n, diag);
  const double r = (sq - expect).frobenius();
  const double scale = h_ref.gershgorin_radius() + b.gershgorin_radius();
  const double tol = 1e-12 * scale * scale;
  return {r / tol, fmt::format("d={} L={} residual {:.3e}", c.dim(), c.side(), r)};
}

Outcome parity_equivalence(CounterRng& rng, Fault) {
  const Cube c = random_cube(rng, 41, 7);
  const auto h = laplacian(c, BoundaryMode::Adjacency, +1);
  const auto b = SymMatrix::diagonal(draws(rng, c.size(), -1, 1));
  const auto block = assemble(h, b);
  const auto p = transform_parity(block, c);
  if (!p.blocks) return {INFINITY, "parity precondition failed on the adjacency operator"};
  auto split = eigvalsh(p.blocks->first).spectrum.values;
  const auto second = eigvalsh(p.blocks->second).spectrum.values;
  split.insert(split.end(), second.begin(), second.end());
  std::sort(split.begin(), split.end());
  const auto full = eigvalsh(block).spectrum.values;
  double r = 0;
  for (std::size_t k = 0; k < full.size(); ++k) r = std::max(r, std::abs(full[k] - split[k]));
  const double tol = 1e-8 * std::max(1.0, spread(full));
  return {r / tol, fmt::format("d={} L={} max deviation {:.3e}", c.dim(), c.side(), r)};
}

Outcome gap_bound(CounterRng& rng, Fault fault) {
  const Cube c = random_cube(rng, 30, 6);
  const double lambda = draw(rng, 0.1, 2.0), beta = draw(rng, 0.0, 2.0);
  const auto v = draws(rng, c.size(), lambda, lambda + 1);
  const auto b = SymMatrix::diagonal(draws(rng, c.size(), beta, beta + 1));
  const auto hn = plus_diag(laplacian(c, BoundaryMode::Neumann), v);
  const auto hd = plus_diag(dirichlet_under_test(c, fault), v);
  double worst = 0;
  std::string detail;
  const double need = std::hypot(lambda, beta);
  for (const auto* h : {&hn, &hd}) {
    const auto s = eigvalsh(assemble(*h, b)).spectrum.values;
    double m = INFINITY;
    for (double x : s) m = std::min(m, std::abs(x));
    const double short_by = need - 1e-9 - m;
    if (short_by > 0) detail = fmt::format("min |E| {:.6g} < sqrt(lambda^2+beta^2) {:.6g}", m, need);
    worst = std::max(worst, short_by > 0 ? 1.0 + short_by : 0.0);
  }
  for (const auto& [top, bot] : {std::pair{&hd, &hn}, std::pair{&hn, &hd}}) {
    for (double x : eigvalsh(assemble_bracketing(*top, *bot, b)).spectrum.values)
      if (std::abs(x) < lambda - 1e-9) {
        worst = std::max(worst, 1.0 + lambda - std::abs(x));
        detail = fmt::format("bracketing eigenvalue {:.6g} inside (-{:.6g}, {:.6g})", x, lambda, lambda);
      }
  }
  return {worst, detail.empty() ? fmt::format("d={} L={} lambda={:.3g} beta={:.3g}", c.dim(), c.side(), lambda, beta)
                                : detail};
}

Outcome zero_split(CounterRng& rng, Fault fault) {
  const Cube c = random_cube(rng, 30, 6);
  const double lambda = draw(rng, 0.2, 1.0);
  const auto v = draws(rng, c.size(), lambda, lambda + 2);
  const auto b = SymMatrix::diagonal(draws(rng, c.size(), -1, 1));
  const auto hn = plus_diag(laplacian(c, BoundaryMode::Neumann), v);
  const auto hd = plus_diag(dirichlet_under_test(c, fault), v);
  const BlockMatrix blocks[4] = {assemble(hd, b), assemble(hn, b), assemble_bracketing(hd, hn, b),
                                 assemble_bracketing(hn, hd, b)};
  const char* names[4] = {"D", "N", "+", "-"};
  for (int i = 0; i < 4; ++i) {
    const auto z = zero_split_check(eigvalsh(blocks[i]).spectrum);
    if (!z)
      return {2.0, fmt::format("X={} d={} L={}: {} negative, {} positive, {} near zero", names[i], c.dim(), c.side(),
                               z.negative, z.positive, z.near_zero)};
  }
  return {0.0, ""};
}

Outcome bracketing_sandwich(CounterRng& rng, Fault fault) {
  const Cube c = random_cube(rng, 40, 7);
  const auto v = draws(rng, c.size(), -1, 1);
  const auto b = SymMatrix::diagonal(draws(rng, c.size(), -1, 1));
  const auto hn = plus_diag(laplacian(c, BoundaryMode::Neumann), v);
  const auto hd = plus_diag(dirichlet_under_test(c, fault), v);
  const auto p = eigvalsh(assemble_bracketing(hd, hn, b)).spectrum.values;
  const auto m = eigvalsh(assemble_bracketing(hn, hd, b)).spectrum.values;
  const auto d = eigvalsh(assemble(hd, b)).spectrum.values;
  const auto n = eigvalsh(assemble(hn, b)).spectrum.values;
  const double r = 4.0 * c.dim() + 2.0;
  for (int g = 0; g < 64; ++g) {
    const double e = -r + 2.0 * r * g / 63.0;
    const auto cp = count_at_most(p, e), cm = count_at_most(m, e);
    const auto cd = count_at_most(d, e), cn = count_at_most(n, e);
    if (!(cp <= cd && cd <= cm && cp <= cn && cn <= cm))
      return {2.0, fmt::format("d={} L={} E={:.4g}: counts + {} D {} N {} - {}", c.dim(), c.side(), e, cp, cd, cn, cm)};
  }
  return {0.0, ""};
}

Outcome const_b(CounterRng& rng, Fault fault) {
  const Cube c = random_cube(rng, 40, 7);
  const auto v = draws(rng, c.size(), -2, 2);
  const double beta = draw(rng, 0.1, 2.0);
  const bool dir = rng.uniform() < 0.5;
  const SymMatrix h = plus_diag(dir ? dirichlet_under_test(c, fault) : laplacian(c, BoundaryMode::Neumann), v);
  const auto mapped = const_b_map(eigvalsh(h).spectrum, beta).values;
  const auto direct = eigvalsh(assemble(h, SymMatrix::diagonal(std::vector<double>(c.size(), beta)))).spectrum.values;
  double r = 0;
  for (std::size_t k = 0; k < direct.size(); ++k) r = std::max(r, std::abs(direct[k] - mapped[k]));
  const double tol = 1e-8 * std::max(1.0, spread(direct));
  return {r / tol, fmt::format("d={} L={} beta={:.3g} max deviation {:.3e}", c.dim(), c.side(), beta, r)};
}

}  // namespace

VerifyScale verify_scale_from_string(const std::string& s) {
  if (s == "small") return VerifyScale::Small;
  if (s == "default") return VerifyScale::Default;
  if (s == "large") return VerifyScale::Large;
  throw ConfigError(fmt::format("--scale: expected small, default or large, got '{}'", s));
}

Fault fault_from_string(const std::string& s) {
  if (s == "none") return Fault::None;
  if (s == "negate-gamma") return Fault::NegatedGamma;
  throw ConfigError(fmt::format("--inject-fault: expected none or negate-gamma, got '{}'", s));
}

bool VerifyReport::passed() const {
  return std::all_of(suites.begin(), suites.end(), [](const auto& s) { return s.passed(); });
}

VerifyReport run_verify(const VerifyOptions& opts) {
  const std::pair<const char*, Instance> suites[] = {
      {"symmetry", symmetry},           {"square-identity", square_identity},
      {"parity-equivalence", parity_equivalence}, {"gap-bound", gap_bound},
      {"zero-split", zero_split},       {"bracketing-sandwich", bracketing_sandwich},
      {"const-b-map", const_b},
  };
  std::size_t instances = 30;
  if (opts.scale == VerifyScale::Small) instances = 8;
  if (opts.scale == VerifyScale::Large) instances = 200;
  if (opts.replay) instances = 1;

  const SeedPolicy policy{opts.seed};
  VerifyReport report;
  for (std::size_t si = 0; si < std::size(suites); ++si) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::uint64_t> keys(instances);
    for (std::size_t i = 0; i < instances; ++i) keys[i] = opts.replay ? *opts.replay : policy.key(i, Field::Aux, si + 1);
    std::vector<Outcome> out(instances);
    parallel_for(instances, opts.threads, [&](std::size_t i) {
      CounterRng rng(keys[i]);
      out[i] = suites[si].second(rng, opts.fault);
    });
    SuiteResult res;
    res.name = suites[si].first;
    res.instances = instances;
    for (std::size_t i = 0; i < instances; ++i) {
      res.worst = std::max(res.worst, out[i].defect);
      if (!(out[i].defect <= 1.0)) res.failures.push_back({keys[i], out[i].detail});
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.suites.push_back(std::move(res));
  }
  return report;
}

nlohmann::json to_json(const VerifyReport& r, const VerifyOptions& opts) {
  using nlohmann::json;
  json suites = json::array();
  for (const auto& s : r.suites) {
    json fails = json::array();
    for (const auto& f : s.failures) fails.push_back({{"instance_seed", f.instance_seed}, {"detail", f.detail}});
    suites.push_back({{"name", s.name},
                      {"passed", s.passed()},
                      {"instances", s.instances},
                      {"worst_normalized_defect", s.worst},
                      {"failures", fails}});
  }
  const char* scale = opts.scale == VerifyScale::Small ? "small" : opts.scale == VerifyScale::Large ? "large" : "default";
  return {{"seed", opts.seed},
          {"scale", scale},
          {"fault", opts.fault == Fault::NegatedGamma ? "negate-gamma" : "none"},
          {"passed", r.passed()},
          {"suites", suites}};
}

}  // namespace rbo
