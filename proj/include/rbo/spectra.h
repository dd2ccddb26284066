// Disorder-ensemble driver: realizations, empirical IDS, DOS histograms,
// gap statistics and exact finite-volume checks.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rbo/disorder.h"
#include "rbo/eigen.h"
#include "rbo/lattice.h"
#include "rbo/operators.h"

namespace rbo {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// D: [[H_D, b], [b, -H_D]]   N: [[H_N, b], [b, -H_N]]
// +: [[H_D, b], [b, -H_N]]   -: [[H_N, b], [b, -H_D]]
enum class Restriction { Dirichlet, Neumann, Plus, Minus };

std::string to_string(Restriction r);
Restriction restriction_from_string(const std::string& s);

struct EnergyGrid {
  double lo = -1.0;
  double hi = 1.0;
  std::size_t points = 512;

  std::vector<double> values() const;
};

struct ExperimentConfig {
  Cube cube{1, 3, true};
  Restriction boundary = Restriction::Neumann;
  // -1: H = -Delta_X + U0 + V (positive semidefinite Laplacian part).
  // +1: H = Delta_X + U0 + V.
  int laplacian_sign = -1;
  DisorderModel disorder;
  PeriodicPotential u0;
  std::size_t realizations = 1;
  std::optional<EnergyGrid> grid;
  std::optional<double> bin_width;
  SeedPolicy seed;
  std::size_t threads = 0;  // 0: hardware concurrency

  void validate() const;
};

struct Realization {
  std::vector<double> v;
  std::vector<double> b;
};

Realization sample_realization(const ExperimentConfig& cfg, std::size_t index);

// -Delta_X + U0 + V (or the +Delta variant), X in {Neumann, Dirichlet}.
SymMatrix build_hamiltonian(const ExperimentConfig& cfg, BoundaryMode mode, const std::vector<double>& v);
BlockMatrix build_block(const ExperimentConfig& cfg, Restriction r, const Realization& real);

// Gershgorin bound on ||-Delta_X + U0||, maximized over the two boundary modes.
double background_norm_bound(const ExperimentConfig& cfg);
EnergyGrid default_grid(const ExperimentConfig& cfg);

struct Histogram {
  std::vector<double> edges;  // size bins + 1
  std::vector<std::size_t> counts;
  std::vector<double> density;
  std::vector<double> stderr_;
  std::size_t total = 0;
  double width = 0.0;

  std::size_t bins() const { return counts.size(); }
  double center(std::size_t k) const { return 0.5 * (edges[k] + edges[k + 1]); }
  // Density at x, zero outside the histogram range.
  double at(double x) const;
};

// Freedman-Diaconis width 2 IQR n^{-1/3}.
double freedman_diaconis_width(std::vector<double> pooled);

// Bins span [-M, M] with M = max |x|, so they are mirror-symmetric about
// zero. With a requested width the range is widened to a whole number of
// bins. Density integrates to one; stderr is binomial.
Histogram make_histogram(const std::vector<double>& pooled, std::optional<double> width);

struct EnsembleResult {
  Restriction boundary = Restriction::Neumann;
  std::size_t half_dim = 0;  // L^d
  std::vector<std::size_t> realization;  // indices of successful realizations
  std::vector<Spectrum> spectra;         // eigenvalues only, same order
  std::vector<std::size_t> failed;

  std::vector<double> grid;
  std::vector<double> ids_mean;
  std::vector<double> ids_stderr;
  Histogram dos;
  std::vector<double> min_abs;  // per successful realization
};

// Aborts with NumericalError if more than 1% of realizations fail.
EnsembleResult run_ensemble(const ExperimentConfig& cfg);

struct GapEstimate {
  double min_gap = 0.0;
  std::vector<double> per_realization;
};
GapEstimate gap_estimate(const EnsembleResult& result);

struct ZeroSplit {
  std::size_t negative = 0;
  std::size_t positive = 0;
  std::size_t near_zero = 0;  // |lambda| <= anomaly_tol
  bool balanced = false;      // negative == positive == size / 2
  bool anomaly = false;       // near_zero > 0
  explicit operator bool() const { return balanced && !anomaly; }
};
ZeroSplit zero_split_check(const Spectrum& s, double anomaly_tol = 1e-9);

// max_k |lambda_k + lambda_{2n+1-k}|. Throws DomainError for spectra whose
// diagonal blocks differ (bracketing or general shapes).
double symmetry_residual(const Spectrum& s);

void write_ids_csv(std::ostream& os, const EnsembleResult& r);
void write_dos_csv(std::ostream& os, const Histogram& h);
void write_gap_csv(std::ostream& os, const EnsembleResult& r);

}  // namespace rbo
