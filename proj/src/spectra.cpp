#include "rbo/spectra.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "rbo/parallel.h"

namespace rbo {

std::string to_string(Restriction r) {
  switch (r) {
    case Restriction::Dirichlet: return "D";
    case Restriction::Neumann: return "N";
    case Restriction::Plus: return "+";
    case Restriction::Minus: return "-";
  }
  return "?";
}

Restriction restriction_from_string(const std::string& s) {
  if (s == "D") return Restriction::Dirichlet;
  if (s == "N") return Restriction::Neumann;
  if (s == "+") return Restriction::Plus;
  if (s == "-") return Restriction::Minus;
  throw ConfigError(fmt::format("boundary must be one of D, N, +, -; got '{}'", s));
}

std::vector<double> EnergyGrid::values() const {
  std::vector<double> out(points);
  if (points == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < points; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return out;
}

void ExperimentConfig::validate() const {
  if (realizations < 1) throw ConfigError("realizations must be at least 1");
  if (laplacian_sign != 1 && laplacian_sign != -1) throw ConfigError("laplacian_sign must be +1 or -1");
  if (grid) {
    if (grid->points < 1) throw ConfigError("grid.points must be at least 1");
    if (!(grid->hi > grid->lo) && grid->points > 1) throw ConfigError("grid must be ascending (lo < hi)");
  }
  if (bin_width && !(*bin_width > 0)) throw ConfigError("histogram.bin_width must be positive");
  if (!u0.empty() && static_cast<int>(u0.period().size()) != cube.dim())
    throw ConfigError("u0.period must have one entry per lattice dimension");
}

Realization sample_realization(const ExperimentConfig& cfg, std::size_t index) {
  const std::size_t n = cfg.cube.size();
  Realization r;
  auto rv = cfg.seed.stream(index, Field::V);
  r.v = sample_iid(cfg.disorder.mu_v, n, rv);
  auto rb = cfg.seed.stream(index, Field::B);
  r.b = sample_iid(cfg.disorder.mu_b, n, rb);
  return r;
}

SymMatrix build_hamiltonian(const ExperimentConfig& cfg, BoundaryMode mode, const std::vector<double>& v) {
  SymMatrix h = laplacian(cfg.cube, mode, cfg.laplacian_sign);
  const auto u = cfg.u0.on(cfg.cube);
  for (std::size_t i = 0; i < h.dim(); ++i) h.add(i, i, u[i] + v[i]);
  return h;
}

BlockMatrix build_block(const ExperimentConfig& cfg, Restriction r, const Realization& real) {
  const SymMatrix b = SymMatrix::diagonal(real.b);
  switch (r) {
    case Restriction::Dirichlet: return assemble(build_hamiltonian(cfg, BoundaryMode::Dirichlet, real.v), b);
    case Restriction::Neumann: return assemble(build_hamiltonian(cfg, BoundaryMode::Neumann, real.v), b);
    case Restriction::Plus:
      return assemble_bracketing(build_hamiltonian(cfg, BoundaryMode::Dirichlet, real.v),
                                 build_hamiltonian(cfg, BoundaryMode::Neumann, real.v), b);
    case Restriction::Minus:
      return assemble_bracketing(build_hamiltonian(cfg, BoundaryMode::Neumann, real.v),
                                 build_hamiltonian(cfg, BoundaryMode::Dirichlet, real.v), b);
  }
  throw DomainError("unknown restriction");
}

double background_norm_bound(const ExperimentConfig& cfg) {
  const auto u = cfg.u0.on(cfg.cube);
  double best = 0.0;
  for (auto mode : {BoundaryMode::Neumann, BoundaryMode::Dirichlet}) {
    SymMatrix h = laplacian(cfg.cube, mode, cfg.laplacian_sign);
    for (std::size_t i = 0; i < h.dim(); ++i) h.add(i, i, u[i]);
    best = std::max(best, h.gershgorin_radius());
  }
  return best;
}

EnergyGrid default_grid(const ExperimentConfig& cfg) {
  const auto [vlo, vhi] = support_bounds(cfg.disorder.mu_v);
  const auto [blo, bhi] = support_bounds(cfg.disorder.mu_b);
  const double r = background_norm_bound(cfg) + std::max(std::abs(vlo), std::abs(vhi)) +
                   std::max(std::abs(blo), std::abs(bhi));
  return EnergyGrid{-r - 0.5, r + 0.5, 512};
}

double Histogram::at(double x) const {
  if (counts.empty() || x < edges.front() || x >= edges.back()) return 0.0;
  auto k = static_cast<std::size_t>((x - edges.front()) / width);
  k = std::min(k, counts.size() - 1);
  return density[k];
}

double freedman_diaconis_width(std::vector<double> pooled) {
  if (pooled.size() < 2) return 1.0;
  std::sort(pooled.begin(), pooled.end());
  const auto quartile = [&](double q) {
    const double pos = q * static_cast<double>(pooled.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double t = pos - static_cast<double>(i);
    return i + 1 < pooled.size() ? pooled[i] * (1 - t) + pooled[i + 1] * t : pooled[i];
  };
  const double iqr = quartile(0.75) - quartile(0.25);
  const double n = static_cast<double>(pooled.size());
  if (iqr > 0) return 2.0 * iqr / std::cbrt(n);
  const double range = pooled.back() - pooled.front();
  return range > 0 ? range / std::sqrt(n) : 1.0;
}

Histogram make_histogram(const std::vector<double>& pooled, std::optional<double> width) {
  Histogram h;
  h.total = pooled.size();
  if (pooled.empty()) return h;

  double m = 0.0;
  for (double x : pooled) m = std::max(m, std::abs(x));
  m = m > 0 ? m * (1 + 1e-12) : 1.0;

  const double w = width ? *width : freedman_diaconis_width(pooled);
  const auto bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2 * m / w)));
  if (width) {
    m = 0.5 * w * static_cast<double>(bins);
    h.width = w;
  } else {
    h.width = 2 * m / static_cast<double>(bins);
  }
  h.edges.resize(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) h.edges[k] = -m + h.width * static_cast<double>(k);
  h.counts.assign(bins, 0);
  for (double x : pooled) {
    auto k = static_cast<std::size_t>((x + m) / h.width);
    h.counts[std::min(k, bins - 1)] += 1;
  }
  const double n = static_cast<double>(h.total);
  h.density.resize(bins);
  h.stderr_.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double p = static_cast<double>(h.counts[k]) / n;
    h.density[k] = p / h.width;
    h.stderr_[k] = std::sqrt(p * (1 - p) / n) / h.width;
  }
  return h;
}

EnsembleResult run_ensemble(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t count = cfg.realizations;

  struct Slot {
    Spectrum spectrum;
    bool ok = false;
  };
  std::vector<Slot> slots(count);
  parallel_for(count, cfg.threads, [&](std::size_t i) {
    const auto real = sample_realization(cfg, i);
    auto res = eigvalsh(build_block(cfg, cfg.boundary, real));
    slots[i].ok = res.report.converged;
    slots[i].spectrum = std::move(res.spectrum);
  });

  EnsembleResult out;
  out.boundary = cfg.boundary;
  out.half_dim = cfg.cube.size();
  for (std::size_t i = 0; i < count; ++i) {
    if (!slots[i].ok) {
      out.failed.push_back(i);
      continue;
    }
    out.realization.push_back(i);
    out.spectra.push_back(std::move(slots[i].spectrum));
  }
  if (static_cast<double>(out.failed.size()) > 0.01 * static_cast<double>(count))
    throw NumericalError(fmt::format("{} of {} realizations failed to converge", out.failed.size(), count));

  const EnergyGrid grid = cfg.grid ? *cfg.grid : default_grid(cfg);
  out.grid = grid.values();
  const double norm = 2.0 * static_cast<double>(out.half_dim);
  const double r = static_cast<double>(out.spectra.size());
  out.ids_mean.assign(out.grid.size(), 0.0);
  out.ids_stderr.assign(out.grid.size(), 0.0);
  for (std::size_t g = 0; g < out.grid.size(); ++g) {
    double sum = 0.0, sum2 = 0.0;
    for (const auto& s : out.spectra) {
      const double c = counting(s, out.grid[g], norm);
      sum += c;
      sum2 += c * c;
    }
    const double mean = sum / r;
    out.ids_mean[g] = mean;
    if (out.spectra.size() > 1) {
      const double var = std::max(0.0, (sum2 - r * mean * mean) / (r - 1));
      out.ids_stderr[g] = std::sqrt(var / r);
    }
  }

  std::vector<double> pooled;
  pooled.reserve(out.spectra.size() * 2 * out.half_dim);
  for (const auto& s : out.spectra) pooled.insert(pooled.end(), s.values.begin(), s.values.end());
  out.dos = make_histogram(pooled, cfg.bin_width);

  for (const auto& s : out.spectra) {
    double m = std::numeric_limits<double>::infinity();
    for (double x : s.values) m = std::min(m, std::abs(x));
    out.min_abs.push_back(m);
  }
  return out;
}

GapEstimate gap_estimate(const EnsembleResult& result) {
  if (result.min_abs.empty()) throw DomainError("gap_estimate: no successful realizations");
  GapEstimate g;
  g.per_realization = result.min_abs;
  g.min_gap = *std::min_element(g.per_realization.begin(), g.per_realization.end());
  return g;
}

ZeroSplit zero_split_check(const Spectrum& s, double anomaly_tol) {
  ZeroSplit z;
  for (double x : s.values) {
    if (std::abs(x) <= anomaly_tol) ++z.near_zero;
    if (x < 0)
      ++z.negative;
    else if (x > 0)
      ++z.positive;
  }
  z.anomaly = z.near_zero > 0;
  z.balanced = s.size() % 2 == 0 && z.negative == s.size() / 2 && z.positive == s.size() / 2;
  return z;
}

double symmetry_residual(const Spectrum& s) {
  if (s.shape != BlockMatrix::Shape::Standard)
    throw DomainError("symmetry_residual applies only to [[H,B],[B,-H]] spectra");
  const std::size_t n = s.size();
  double r = 0.0;
  for (std::size_t k = 0; k < n; ++k) r = std::max(r, std::abs(s.values[k] + s.values[n - 1 - k]));
  return r;
}

void write_ids_csv(std::ostream& os, const EnsembleResult& r) {
  fmt::print(os, "# E [energy], N_mean [fraction of 2L^d eigenvalues <= E], N_stderr [same units]\n");
  fmt::print(os, "E,N_mean,N_stderr\n");
  for (std::size_t g = 0; g < r.grid.size(); ++g)
    fmt::print(os, "{:.17g},{:.17g},{:.17g}\n", r.grid[g], r.ids_mean[g], r.ids_stderr[g]);
}

void write_dos_csv(std::ostream& os, const Histogram& h) {
  fmt::print(os, "# bin_center [energy], density [1/energy], stderr [1/energy], count [eigenvalues]\n");
  fmt::print(os, "bin_center,density,stderr,count\n");
  for (std::size_t k = 0; k < h.bins(); ++k)
    fmt::print(os, "{:.17g},{:.17g},{:.17g},{}\n", h.center(k), h.density[k], h.stderr_[k], h.counts[k]);
}

void write_gap_csv(std::ostream& os, const EnsembleResult& r) {
  fmt::print(os, "# realization [index], min_abs_eig [energy]\n");
  fmt::print(os, "realization,min_abs_eig\n");
  for (std::size_t i = 0; i < r.min_abs.size(); ++i) fmt::print(os, "{},{:.17g}\n", r.realization[i], r.min_abs[i]);
}

}  // namespace rbo
