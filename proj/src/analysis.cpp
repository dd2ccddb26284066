#include "rbo/analysis.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include "json.hpp"

#include "rbo/parallel.h"

namespace rbo {

Spectrum const_b_map(const Spectrum& spec_h, double beta) {
  Spectrum out;
  out.shape = BlockMatrix::Shape::Standard;
  out.values.reserve(2 * spec_h.size());
  for (double e : spec_h.values) {
    const double r = std::hypot(e, beta);
    out.values.push_back(-r);
    out.values.push_back(r);
  }
  std::sort(out.values.begin(), out.values.end());
  return out;
}

double source_density(const DosTransform& t, double x) {
  if (const auto* d = std::get_if<DensitySpec>(&t.source)) return d->pdf(x);
  return std::get<Histogram>(t.source).at(x);
}

DosValue const_b_dos(const DosTransform& t, double e) {
  const double ae = std::abs(e);
  const double ab = std::abs(t.beta);
  if (ae < ab) return {0.0, false};
  if (ae == ab) return {std::numeric_limits<double>::infinity(), true};
  // (|E| - |b|)(|E| + |b|) keeps precision near the edge
  const double s = std::sqrt((ae - ab) * (ae + ab));
  const double d = source_density(t, s) + source_density(t, -s);
  return {ae / s * d, false};
}

double wegner_bound(const WegnerBound& bound, double e) { return 2.0 * (std::abs(e) + 1.0) / bound.lower * bound.bv; }

WegnerBound certify_wegner(const ExperimentConfig& cfg, WegnerBound::Mode mode) {
  WegnerBound b;
  b.mode = mode;
  if (mode == WegnerBound::Mode::H) {
    if (cfg.disorder.mu_v.is_point_mass()) throw HypothesisError("wegner (H): V law has no Lebesgue density");
    // Gershgorin lower edge of the Laplacian part over every diagonal block in use.
    double lap_lower = std::numeric_limits<double>::infinity();
    for (auto m : {BoundaryMode::Neumann, BoundaryMode::Dirichlet}) {
      const SymMatrix lap = laplacian(cfg.cube, m, cfg.laplacian_sign);
      for (std::size_t i = 0; i < lap.dim(); ++i) {
        double off = 0.0;
        for (std::size_t j = 0; j < lap.dim(); ++j)
          if (j != i) off += std::abs(lap(i, j));
        lap_lower = std::min(lap_lower, lap(i, i) - off);
      }
    }
    const double u_min = cfg.u0.empty() ? 0.0 : cfg.u0.min_value();
    b.lower = lap_lower + support_bounds(cfg.disorder.mu_v).first + u_min;
    b.bv = bv_norm(cfg.disorder.mu_v);
    if (!(b.lower > 0))
      throw HypothesisError(
          fmt::format("wegner (H): H >= lambda > 0 not certified by support bounds (lambda = {:.6g})", b.lower));
  } else {
    if (cfg.disorder.mu_b.is_point_mass()) throw HypothesisError("wegner (B): b law has no Lebesgue density");
    b.lower = support_bounds(cfg.disorder.mu_b).first;
    b.bv = bv_norm(cfg.disorder.mu_b);
    if (!(b.lower > 0))
      throw HypothesisError(
          fmt::format("wegner (B): b >= beta > 0 not certified by support bounds (beta = {:.6g})", b.lower));
  }
  return b;
}

WegnerReport wegner_check(const Histogram& dos, const WegnerBound& bound, std::size_t min_count) {
  if (!(bound.lower > 0) || !(bound.bv > 0) || !std::isfinite(bound.bv))
    throw HypothesisError("wegner_check: bound constants must be positive and finite");
  WegnerReport r;
  r.bound = bound;
  r.min_count = min_count;
  for (std::size_t k = 0; k < dos.bins(); ++k) {
    if (dos.counts[k] < min_count) continue;
    ++r.bins_checked;
    const double c = dos.center(k);
    const double lim = wegner_bound(bound, c);
    if (dos.density[k] > lim + 3.0 * dos.stderr_[k])
      r.violations.push_back({k, c, dos.density[k], dos.stderr_[k], lim, dos.counts[k]});
  }
  return r;
}

void write_wegner_json(std::ostream& os, const WegnerReport& r, const Histogram& dos) {
  using nlohmann::json;
  json bins = json::array();
  for (std::size_t k = 0; k < dos.bins(); ++k)
    bins.push_back({{"center", dos.center(k)},
                    {"density", dos.density[k]},
                    {"stderr", dos.stderr_[k]},
                    {"count", dos.counts[k]},
                    {"bound", wegner_bound(r.bound, dos.center(k))},
                    {"checked", dos.counts[k] >= r.min_count}});
  json viol = json::array();
  for (const auto& v : r.violations)
    viol.push_back({{"bin", v.bin}, {"center", v.center}, {"density", v.density}, {"stderr", v.stderr_},
                    {"bound", v.bound}, {"count", v.count}});
  json doc = {{"mode", r.bound.mode == WegnerBound::Mode::H ? "H" : "B"},
              {"lower", r.bound.lower},
              {"bv", r.bound.bv},
              {"min_count", r.min_count},
              {"slack_stderr", 3},
              {"bins_checked", r.bins_checked},
              {"passed", r.passed()},
              {"bins", bins},
              {"violations", viol}};
  os << doc.dump(2) << '\n';
}

std::vector<double> eigenvalue_potential_derivative(const Spectrum& spec, std::size_t k) {
  if (!spec.vectors) throw DomainError("eigenvector required");
  const auto& vec = *spec.vectors;
  const std::size_t n = vec.rows() / 2;
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = vec(j, k), b = vec(n + j, k);
    out[j] = a * a - b * b;
  }
  return out;
}

FeynmanHellmann feynman_hellmann_sum(const BlockMatrix& block, const Spectrum& spec, std::size_t k) {
  if (block.shape != BlockMatrix::Shape::Standard) throw DomainError("feynman_hellmann_sum needs [[H,b],[b,-H]]");
  if (!spec.vectors) throw DomainError("feynman_hellmann_sum needs eigenvectors");
  if (k >= spec.size()) throw DomainError("eigenvalue index out of range");
  for (std::size_t i = 0; i < block.half(); ++i)
    for (std::size_t j = 0; j < block.half(); ++j)
      if (i != j && block.off(i, j) != 0.0) throw DomainError("feynman_hellmann_sum needs diagonal b");

  const std::size_t n = block.half();
  const auto& vec = *spec.vectors;
  const double e = spec.values[k];
  const double scale = std::max(spec.norm(), 1e-300);

  std::vector<double> psi(2 * n), psi1(n), psi2(n);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < 2 * n; ++i) {
    psi[i] = vec(i, k);
    norm2 += psi[i] * psi[i];
  }
  const auto mpsi = block.to_dense().dense() * std::span<const double>(psi);
  double res2 = 0.0;
  for (std::size_t i = 0; i < 2 * n; ++i) res2 += (mpsi[i] - e * psi[i]) * (mpsi[i] - e * psi[i]);
  if (std::abs(norm2 - 1.0) > 1e-9 || std::sqrt(res2) > 1e-9 * scale)
    throw DomainError("feynman_hellmann_sum: eigenpair not normalized or residual above 1e-9");

  FeynmanHellmann out;
  double gap = std::numeric_limits<double>::infinity();
  if (k > 0) gap = std::min(gap, e - spec.values[k - 1]);
  if (k + 1 < spec.size()) gap = std::min(gap, spec.values[k + 1] - e);
  out.gap_to_neighbour = gap;
  out.min_eig_h = eigvalsh(block.top).spectrum.values.front();
  if (gap < 1e-10 * scale) {
    out.skipped = true;
    return out;
  }

  for (std::size_t j = 0; j < n; ++j) {
    psi1[j] = psi[j];
    psi2[j] = psi[n + j];
  }
  double diff = 0.0;
  for (std::size_t j = 0; j < n; ++j) diff += psi1[j] * psi1[j] - psi2[j] * psi2[j];
  out.lhs = e * diff;
  const auto& h = block.top.dense();
  const auto h1 = h * std::span<const double>(psi1);
  const auto h2 = h * std::span<const double>(psi2);
  for (std::size_t j = 0; j < n; ++j) out.rhs += psi1[j] * h1[j] + psi2[j] * h2[j];
  return out;
}

SmoothTestFunction tanh_step(double a, double center, double scale) {
  SmoothTestFunction f;
  f.value = [=](double x) { return a * 0.5 * (1.0 + std::tanh((x - center) / scale)); };
  f.derivative = [=](double x) {
    const double c = std::cosh((x - center) / scale);
    return a * 0.5 / (scale * c * c);
  };
  f.oscillation = std::abs(a);
  return f;
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double fa, double b, double fb, double m,
                    double fm, double whole, double tol, int depth, bool& ok) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0) {
    ok = false;
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, ok) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, ok);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  bool ok = true;
  const double r = simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth, ok);
  if (!ok || !std::isfinite(r)) throw NumericalError("adaptive quadrature did not converge");
  return r;
}

BvProbe bv_inequality_probe(const SmoothTestFunction& f, const DensitySpec& phi) {
  if (phi.is_point_mass()) throw DomainError("bv_inequality_probe needs a Lebesgue density");
  // phi is constant on each cell; integrate F' times the cell height.
  std::vector<double> bp;
  std::vector<double> heights;
  if (const auto* u = std::get_if<Uniform>(&phi.variant())) {
    bp = {u->lo, u->hi};
    heights = {1.0 / (u->hi - u->lo)};
  } else {
    const auto& p = std::get<PiecewiseConstant>(phi.variant());
    bp = p.breakpoints;
    heights = p.heights;
  }
  double integral = 0.0;
  for (std::size_t k = 0; k < heights.size(); ++k) {
    if (heights[k] == 0.0) continue;
    const double h = heights[k];
    integral += adaptive_simpson([&](double x) { return f.derivative(x) * h; }, bp[k], bp[k + 1], 1e-13);
  }
  return {std::abs(integral), f.oscillation * bv_norm(phi)};
}

std::int64_t LifshitsRun::length(double eps, int dim) const {
  if (!(eps > 0)) throw DomainError("epsilon must be positive");
  return static_cast<std::int64_t>(std::ceil(c * std::pow(eps, -alpha / dim)));
}

LifshitsTable lifshits_probe(const LifshitsRun& run, const ExperimentConfig& base) {
  if (base.laplacian_sign != -1) throw HypothesisError("lifshits_probe needs H = -Delta_N + U0 + V");
  if (base.disorder.mu_v.is_point_mass()) throw HypothesisError("lifshits_probe needs a V density");
  for (std::size_t i = 1; i < run.epsilons.size(); ++i)
    if (!(run.epsilons[i] < run.epsilons[i - 1])) throw DomainError("epsilons must be strictly descending");
  LifshitsTable table;
  const double u_min = base.u0.empty() ? 0.0 : base.u0.min_value();
  table.lambda = support_bounds(base.disorder.mu_v).first + u_min;
  if (!(table.lambda > 0)) throw HypothesisError("lifshits_probe needs min supp V + min U0 > 0");

  const int dim = base.cube.dim();
  for (std::size_t ei = 0; ei < run.epsilons.size(); ++ei) {
    const double eps = run.epsilons[ei];
    LifshitsRow row;
    row.epsilon = eps;
    row.length = run.length(eps, dim);
    row.realizations = run.realizations;

    ExperimentConfig cfg = base;
    cfg.cube = Cube(dim, row.length, base.cube.centered());
    const SymMatrix lap = laplacian(cfg.cube, BoundaryMode::Neumann, -1);
    const auto u = cfg.u0.on(cfg.cube);
    const double threshold = table.lambda + eps;

    std::vector<char> hit(run.realizations, 0);
    parallel_for(run.realizations, base.threads, [&](std::size_t r) {
      auto rng = cfg.seed.stream(r, Field::V, ei + 1);
      const auto v = sample_iid(cfg.disorder.mu_v, cfg.cube.size(), rng);
      double ground = 0.0;
      if (dim == 1) {
        Tridiagonal t;
        t.diag.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) t.diag[i] = lap(i, i) + u[i] + v[i];
        for (std::size_t i = 0; i + 1 < v.size(); ++i) t.off.push_back(lap(i, i + 1));
        ground = min_eig_tridiag(t, 1e-12);
      } else {
        SymMatrix h = lap;
        for (std::size_t i = 0; i < h.dim(); ++i) h.add(i, i, u[i] + v[i]);
        ground = eigvalsh(h).spectrum.values.front();
      }
      hit[r] = ground <= threshold ? 1 : 0;
    });
    row.hits = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
    row.p_hat = static_cast<double>(row.hits) / static_cast<double>(row.realizations);
    row.stderr_ = std::sqrt(row.p_hat * (1 - row.p_hat) / static_cast<double>(row.realizations));
    table.rows.push_back(row);
  }
  return table;
}

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

}  // namespace

ExponentFit lifshits_exponent_fit(const LifshitsTable& table) {
  std::vector<double> x, y;
  for (const auto& r : table.rows)
    if (r.p_hat > 0 && r.p_hat < 1) {
      x.push_back(std::log(r.epsilon));
      y.push_back(std::log(std::abs(std::log(r.p_hat))));
    }
  if (x.size() < 4)
    throw DomainError(fmt::format("lifshits_exponent_fit needs at least 4 points with 0 < P < 1, got {}", x.size()));

  ExponentFit out;
  out.points = x.size();
  const auto full = least_squares(x, y);
  out.alpha = -full.slope;
  out.intercept = full.intercept;

  const std::size_t n = x.size();
  std::vector<double> jack;
  for (std::size_t del = 0; del < n; ++del) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n; ++i)
      if (i != del) {
        xs.push_back(x[i]);
        ys.push_back(y[i]);
      }
    jack.push_back(-least_squares(xs, ys).slope);
  }
  double mean = 0;
  for (double a : jack) mean += a;
  mean /= static_cast<double>(n);
  double ss = 0;
  for (double a : jack) ss += (a - mean) * (a - mean);
  out.jackknife_stderr = std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n) * ss);
  out.band_lo = out.alpha - 2 * out.jackknife_stderr;
  out.band_hi = out.alpha + 2 * out.jackknife_stderr;
  return out;
}

void write_lifshits_csv(std::ostream& os, const LifshitsTable& t) {
  fmt::print(os,
             "# epsilon [energy], L_eps [sites], R [realizations], p_hat [probability], stderr [probability], "
             "ln_eps, lnln = ln|ln p_hat| (empty if p_hat is 0 or 1); lambda = {:.17g}\n",
             t.lambda);
  fmt::print(os, "epsilon,L_eps,R,p_hat,stderr,ln_eps,lnln\n");
  for (const auto& r : t.rows) {
    const std::string lnln =
        (r.p_hat > 0 && r.p_hat < 1) ? fmt::format("{:.17g}", std::log(std::abs(std::log(r.p_hat)))) : "";
    fmt::print(os, "{:.17g},{},{},{:.17g},{:.17g},{:.17g},{}\n", r.epsilon, r.length, r.realizations, r.p_hat,
               r.stderr_, std::log(r.epsilon), lnln);
  }
}

InclusionReport spectrum_inclusion_check(const Spectrum& spec_h, const Spectrum& spec_block,
                                         std::span<const double> energies, std::span<const double> betas) {
  if (spec_h.values.empty() || spec_block.values.empty()) throw DomainError("empty spectrum");
  const auto nearest = [](const std::vector<double>& sorted, double x) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
    double best = std::numeric_limits<double>::infinity();
    if (it != sorted.end()) best = std::min(best, std::abs(*it - x));
    if (it != sorted.begin()) best = std::min(best, std::abs(*std::prev(it) - x));
    return best;
  };
  const auto snap = [&](double x) {
    auto it = std::lower_bound(spec_h.values.begin(), spec_h.values.end(), x);
    if (it == spec_h.values.end()) return spec_h.values.back();
    if (it == spec_h.values.begin()) return *it;
    return (*it - x) < (x - *std::prev(it)) ? *it : *std::prev(it);
  };
  InclusionReport out;
  for (double e0 : energies) {
    const double e = snap(e0);
    for (double beta : betas) {
      const double r = std::hypot(e, beta);
      const double d = std::max(nearest(spec_block.values, r), nearest(spec_block.values, -r));
      out.distances.push_back(d);
      out.max_distance = std::max(out.max_distance, d);
    }
  }
  return out;
}

}  // namespace rbo
