// Closed-form transforms and the statistical and identity verifiers.
#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "rbo/disorder.h"
#include "rbo/eigen.h"
#include "rbo/spectra.h"

namespace rbo {

// Raised when an experiment does not certify the hypothesis a check needs.
class HypothesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Constant off-diagonal block

// Sorted multiset { +-sqrt(E^2 + beta^2) : E in spec_h }.
Spectrum const_b_map(const Spectrum& spec_h, double beta);

struct DosTransform {
  std::variant<DensitySpec, Histogram> source;  // density of states of H
  double beta = 1.0;
};

struct DosValue {
  double value = 0.0;
  bool infinite = false;  // |E| == |beta|: inverse square-root singularity
};

// |E| / sqrt(E^2 - beta^2) * [D(s) + D(-s)], s = sqrt(E^2 - beta^2), and 0
// inside the gap. Note the bracket sums both branches, so the result
// integrates to 2 when D integrates to 1.
DosValue const_b_dos(const DosTransform& t, double e);

// D evaluated from the transform's source.
double source_density(const DosTransform& t, double x);

// ---------------------------------------------------------------------------
// Wegner estimate

struct WegnerBound {
  enum class Mode { H, B };
  Mode mode = Mode::H;
  double lower = 1.0;  // lambda (H) or beta (B)
  double bv = 2.0;     // total variation of the relevant density
};

// 2 (|E| + 1) / lower * bv
double wegner_bound(const WegnerBound& bound, double e);

// Derives the bound from the experiment's support bounds. Throws
// HypothesisError when H >= lambda > 0 (resp. b >= beta > 0) is not certified
// or the relevant law has no density.
WegnerBound certify_wegner(const ExperimentConfig& cfg, WegnerBound::Mode mode);

struct WegnerViolation {
  std::size_t bin = 0;
  double center = 0.0;
  double density = 0.0;
  double stderr_ = 0.0;
  double bound = 0.0;
  std::size_t count = 0;
};

struct WegnerReport {
  WegnerBound bound;
  std::size_t min_count = 100;
  std::size_t bins_checked = 0;
  std::vector<WegnerViolation> violations;
  bool passed() const { return violations.empty(); }
};

// Every bin with count >= min_count must satisfy
// density <= wegner_bound(center) + 3 stderr.
WegnerReport wegner_check(const Histogram& dos, const WegnerBound& bound, std::size_t min_count = 100);

void write_wegner_json(std::ostream& os, const WegnerReport& r, const Histogram& dos);

// ---------------------------------------------------------------------------
// Eigenvalue derivative identity

struct FeynmanHellmann {
  bool skipped = false;   // eigenvalue not simple
  double lhs = 0.0;       // E * sum_j (psi1(j)^2 - psi2(j)^2)
  double rhs = 0.0;       // <psi1, H psi1> + <psi2, H psi2>
  double min_eig_h = 0.0;
  double gap_to_neighbour = 0.0;
};

// Eigenpair k of `spec` (which must carry vectors) of `block` =
// [[H, b], [b, -H]] with diagonal b.
FeynmanHellmann feynman_hellmann_sum(const BlockMatrix& block, const Spectrum& spec, std::size_t k);

// d E_k / d V_j = psi1(j)^2 - psi2(j)^2 for every site j.
std::vector<double> eigenvalue_potential_derivative(const Spectrum& spec, std::size_t k);

// ---------------------------------------------------------------------------
// Bounded-variation integral inequality

struct SmoothTestFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  double oscillation = 1.0;  // sup F - inf F
};

// a (1 + tanh((x - center) / scale)) / 2
SmoothTestFunction tanh_step(double a, double center = 0.0, double scale = 1.0);

struct BvProbe {
  double lhs = 0.0;  // |int F' phi|
  double rhs = 0.0;  // a ||phi||_BV
};

// Integrates F' phi by adaptive Simpson cell by cell. Throws
// NumericalError if the quadrature does not converge.
BvProbe bv_inequality_probe(const SmoothTestFunction& f, const DensitySpec& phi);

// Adaptive Simpson on [a, b] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                        int max_depth = 50);

// ---------------------------------------------------------------------------
// Lifshits tail

struct LifshitsRun {
  std::vector<double> epsilons;  // descending
  double alpha = 0.5;
  double c = 4.0;
  std::size_t realizations = 2000;

  // ceil(c * eps^{-alpha/d})
  std::int64_t length(double eps, int dim) const;
};

struct LifshitsRow {
  double epsilon = 0.0;
  std::int64_t length = 0;
  std::size_t realizations = 0;
  std::size_t hits = 0;
  double p_hat = 0.0;
  double stderr_ = 0.0;
};

struct LifshitsTable {
  double lambda = 0.0;  // certified lower spectral edge of H_N
  std::vector<LifshitsRow> rows;
};

// For each epsilon: R Neumann realizations at side L_eps (base config's
// dimension, V law, U0 and seed), P_hat = fraction with
// inf spec(H_N) <= lambda + eps. lambda = min supp V + min U0 must be > 0
// and the Laplacian sign must be -1, else HypothesisError.
LifshitsTable lifshits_probe(const LifshitsRun& run, const ExperimentConfig& base);

struct ExponentFit {
  double alpha = 0.0;
  double intercept = 0.0;
  double jackknife_stderr = 0.0;
  double band_lo = 0.0;  // alpha - 2 se
  double band_hi = 0.0;
  std::size_t points = 0;
};

// Least-squares slope of ln|ln P| against ln eps over the points with
// 0 < P < 1; alpha = -slope. Throws DomainError with fewer than 4 points.
ExponentFit lifshits_exponent_fit(const LifshitsTable& table);

void write_lifshits_csv(std::ostream& os, const LifshitsTable& t);

// ---------------------------------------------------------------------------
// Spectrum location

struct InclusionReport {
  double max_distance = 0.0;
  std::vector<double> distances;  // one per (E, beta) pair
};

// For each sample energy (snapped to the nearest eigenvalue of spec_h) and
// each beta, the distance from +-sqrt(E^2 + beta^2) to the nearest
// eigenvalue of spec_block.
InclusionReport spectrum_inclusion_check(const Spectrum& spec_h, const Spectrum& spec_block,
                                         std::span<const double> energies, std::span<const double> betas);

}  // namespace rbo
