// Single-site probability laws, i.i.d. sampling and deterministic seeding.
#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace rbo {

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

struct PiecewiseConstant {
  std::vector<double> breakpoints;  // ascending, size = heights.size() + 1
  std::vector<double> heights;      // non-negative
};

// Degenerate law (b identically equal to a constant). Not a Lebesgue
// density: bv_norm is +inf and the Wegner check refuses it.
struct PointMass {
  double value = 0.0;
};

class DensitySpec {
 public:
  using Variant = std::variant<Uniform, PiecewiseConstant, PointMass>;

  // Validates: compact support, non-negative heights, total mass 1 within
  // 1e-12. Throws ConfigError otherwise.
  DensitySpec(Variant v);  // NOLINT(google-explicit-constructor)

  static DensitySpec uniform(double lo, double hi) { return DensitySpec(Uniform{lo, hi}); }
  // center + width * Uniform[-1/2, 1/2]
  static DensitySpec shifted_uniform(double center, double width) {
    return uniform(center - 0.5 * width, center + 0.5 * width);
  }
  static DensitySpec point(double value) { return DensitySpec(PointMass{value}); }

  const Variant& variant() const { return v_; }
  bool is_point_mass() const { return std::holds_alternative<PointMass>(v_); }

  double pdf(double x) const;
  double cdf(double x) const;
  // Inverse CDF on [0, 1).
  double quantile(double u) const;
  double mean() const;

 private:
  Variant v_;
  std::vector<double> cumulative_;  // piecewise: normalized, last entry exactly 1
};

std::pair<double, double> support_bounds(const DensitySpec& d);

// Total variation of the density as a function on the real line, counting the
// jumps from and to zero at the support edges.
double bv_norm(const DensitySpec& d);

// SplitMix64 finalizer, a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

// Counter-based generator: output k of a stream with key K is
// mix64(K + (k + 1) * 0x9E3779B97F4A7C15). Satisfies
// UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  // 53-bit uniform in [0, 1).
  double uniform();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

enum class Field : std::uint64_t { V = 0, B = 1, Aux = 2 };

// Stream key for (group, realization, field):
//   stream = ((group << 40) | realization) * 4 + field
//   key    = mix64(base_seed + (stream + 1) * 0x9E3779B97F4A7C15)
// Injective in the stream id for a fixed base seed (realization < 2^40,
// group < 2^22).
struct SeedPolicy {
  std::uint64_t base_seed = 0;

  std::uint64_t key(std::uint64_t realization, Field field, std::uint64_t group = 0) const;
  CounterRng stream(std::uint64_t realization, Field field, std::uint64_t group = 0) const {
    return CounterRng(key(realization, field, group));
  }
};

std::vector<double> sample_iid(const DensitySpec& d, std::size_t n, CounterRng& rng);
inline std::vector<double> sample_iid(const DensitySpec& d, std::size_t n, std::uint64_t key) {
  CounterRng rng(key);
  return sample_iid(d, n, rng);
}

struct DisorderModel {
  DensitySpec mu_v = DensitySpec::uniform(0.0, 1.0);
  DensitySpec mu_b = DensitySpec::point(0.0);
};

std::string describe(const DensitySpec& d);

}  // namespace rbo
