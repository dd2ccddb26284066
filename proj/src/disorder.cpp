#include "rbo/disorder.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "rbo/lattice.h"

namespace rbo {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

DensitySpec::DensitySpec(Variant v) : v_(std::move(v)) {
  std::visit(overloaded{
                 [](const Uniform& u) {
                   if (!std::isfinite(u.lo) || !std::isfinite(u.hi) || !(u.hi > u.lo))
                     throw ConfigError(fmt::format("uniform density needs finite lo < hi, got [{}, {}]", u.lo, u.hi));
                 },
                 [this](const PiecewiseConstant& p) {
                   if (p.heights.empty() || p.breakpoints.size() != p.heights.size() + 1)
                     throw ConfigError("piecewise density needs one more breakpoint than heights");
                   for (double x : p.breakpoints)
                     if (!std::isfinite(x)) throw ConfigError("piecewise density: non-finite breakpoint");
                   for (std::size_t k = 0; k + 1 < p.breakpoints.size(); ++k)
                     if (!(p.breakpoints[k + 1] > p.breakpoints[k]))
                       throw ConfigError("piecewise density: breakpoints must be strictly ascending");
                   double mass = 0.0;
                   cumulative_.assign(1, 0.0);
                   for (std::size_t k = 0; k < p.heights.size(); ++k) {
                     if (!(p.heights[k] >= 0.0) || !std::isfinite(p.heights[k]))
                       throw ConfigError("piecewise density: heights must be finite and non-negative");
                     mass += p.heights[k] * (p.breakpoints[k + 1] - p.breakpoints[k]);
                     cumulative_.push_back(mass);
                   }
                   if (std::abs(mass - 1.0) > 1e-12)
                     throw ConfigError(fmt::format("piecewise density integrates to {:.17g}, not 1", mass));
                   for (double& c : cumulative_) c /= mass;
                   cumulative_.back() = 1.0;
                 },
                 [](const PointMass& p) {
                   if (!std::isfinite(p.value)) throw ConfigError("point mass: non-finite value");
                 },
             },
             v_);
}

double DensitySpec::pdf(double x) const {
  return std::visit(overloaded{
                        [x](const Uniform& u) { return (x >= u.lo && x < u.hi) ? 1.0 / (u.hi - u.lo) : 0.0; },
                        [x](const PiecewiseConstant& p) {
                          const auto& bp = p.breakpoints;
                          if (x < bp.front() || x >= bp.back()) return 0.0;
                          const auto it = std::upper_bound(bp.begin(), bp.end(), x);
                          return p.heights[static_cast<std::size_t>(it - bp.begin()) - 1];
                        },
                        [x](const PointMass& p) {
                          return x == p.value ? std::numeric_limits<double>::infinity() : 0.0;
                        },
                    },
                    v_);
}

double DensitySpec::cdf(double x) const {
  return std::visit(overloaded{
                        [x](const Uniform& u) { return std::clamp((x - u.lo) / (u.hi - u.lo), 0.0, 1.0); },
                        [this, x](const PiecewiseConstant& p) {
                          const auto& bp = p.breakpoints;
                          if (x <= bp.front()) return 0.0;
                          if (x >= bp.back()) return 1.0;
                          const auto k = static_cast<std::size_t>(std::upper_bound(bp.begin(), bp.end(), x) - bp.begin()) - 1;
                          const double t = (x - bp[k]) / (bp[k + 1] - bp[k]);
                          return cumulative_[k] + t * (cumulative_[k + 1] - cumulative_[k]);
                        },
                        [x](const PointMass& p) { return x >= p.value ? 1.0 : 0.0; },
                    },
                    v_);
}

double DensitySpec::quantile(double u) const {
  return std::visit(overloaded{
                        [u](const Uniform& d) { return d.lo + u * (d.hi - d.lo); },
                        [this, u](const PiecewiseConstant& p) {
                          // first cell whose upper cumulative exceeds u, skipping empty cells
                          const auto it = std::upper_bound(cumulative_.begin() + 1, cumulative_.end(), u);
                          auto k = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
                          k = std::min(k, p.heights.size() - 1);
                          const double lo = p.breakpoints[k];
                          const double hi = p.breakpoints[k + 1];
                          const double t = (u - cumulative_[k]) / (cumulative_[k + 1] - cumulative_[k]);
                          return lo + t * (hi - lo);
                        },
                        [](const PointMass& p) { return p.value; },
                    },
                    v_);
}

double DensitySpec::mean() const {
  return std::visit(overloaded{
                        [](const Uniform& u) { return 0.5 * (u.lo + u.hi); },
                        [](const PiecewiseConstant& p) {
                          double m = 0.0;
                          for (std::size_t k = 0; k < p.heights.size(); ++k) {
                            const double a = p.breakpoints[k], b = p.breakpoints[k + 1];
                            m += p.heights[k] * 0.5 * (b * b - a * a);
                          }
                          return m;
                        },
                        [](const PointMass& p) { return p.value; },
                    },
                    v_);
}

std::pair<double, double> support_bounds(const DensitySpec& d) {
  return std::visit(overloaded{
                        [](const Uniform& u) { return std::make_pair(u.lo, u.hi); },
                        [](const PiecewiseConstant& p) {
                          std::size_t first = 0, last = p.heights.size() - 1;
                          while (p.heights[first] == 0.0) ++first;
                          while (p.heights[last] == 0.0) --last;
                          return std::make_pair(p.breakpoints[first], p.breakpoints[last + 1]);
                        },
                        [](const PointMass& p) { return std::make_pair(p.value, p.value); },
                    },
                    d.variant());
}

double bv_norm(const DensitySpec& d) {
  return std::visit(overloaded{
                        [](const Uniform& u) { return 2.0 / (u.hi - u.lo); },
                        [](const PiecewiseConstant& p) {
                          double tv = 0.0, prev = 0.0;
                          for (double h : p.heights) {
                            tv += std::abs(h - prev);
                            prev = h;
                          }
                          return tv + prev;
                        },
                        [](const PointMass&) { return std::numeric_limits<double>::infinity(); },
                    },
                    d.variant());
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CounterRng::result_type CounterRng::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

std::uint64_t SeedPolicy::key(std::uint64_t realization, Field field, std::uint64_t group) const {
  const std::uint64_t stream = (((group << 40) | realization) << 2) | static_cast<std::uint64_t>(field);
  return mix64(base_seed + (stream + 1) * kGolden);
}

std::vector<double> sample_iid(const DensitySpec& d, std::size_t n, CounterRng& rng) {
  std::vector<double> out(n);
  for (auto& x : out) x = d.quantile(rng.uniform());
  return out;
}

std::string describe(const DensitySpec& d) {
  return std::visit(overloaded{
                        [](const Uniform& u) { return fmt::format("uniform[{}, {}]", u.lo, u.hi); },
                        [](const PiecewiseConstant& p) {
                          return fmt::format("piecewise({} cells on [{}, {}])", p.heights.size(), p.breakpoints.front(),
                                             p.breakpoints.back());
                        },
                        [](const PointMass& p) { return fmt::format("point({})", p.value); },
                    },
                    d.variant());
}

}  // namespace rbo
