#include "rbo/lattice.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace rbo {

Cube::Cube(int dim, std::int64_t side, bool centered) : dim_(dim), side_(side), origin_(0), size_(1) {
  if (dim < 1) throw ConfigError(fmt::format("cube dimension must be positive, got {}", dim));
  if (side < 1) throw ConfigError(fmt::format("cube side must be positive, got {}", side));
  if (centered && side % 2 == 1) origin_ = -(side - 1) / 2;

  strides_.assign(static_cast<std::size_t>(dim), 1);
  const auto limit = std::numeric_limits<std::size_t>::max();
  for (int k = 0; k < dim; ++k) {
    if (size_ > limit / static_cast<std::size_t>(side))
      throw ConfigError(fmt::format("cube of side {} in dimension {} overflows the site count", side, dim));
    size_ *= static_cast<std::size_t>(side);
  }
  for (int k = dim - 2; k >= 0; --k)
    strides_[static_cast<std::size_t>(k)] = strides_[static_cast<std::size_t>(k) + 1] * static_cast<std::size_t>(side);
}

bool Cube::contains(const Site& j) const {
  if (static_cast<int>(j.size()) != dim_) return false;
  return std::all_of(j.begin(), j.end(), [&](std::int64_t c) { return c >= origin_ && c < origin_ + side_; });
}

std::size_t Cube::index_of(const Site& j) const {
  if (!contains(j)) throw DomainError("site outside cube");
  std::size_t idx = 0;
  for (int k = 0; k < dim_; ++k)
    idx += static_cast<std::size_t>(j[static_cast<std::size_t>(k)] - origin_) * strides_[static_cast<std::size_t>(k)];
  return idx;
}

Site Cube::site_at(std::size_t index) const {
  if (index >= size_) throw DomainError("site index out of range");
  Site j(static_cast<std::size_t>(dim_));
  for (int k = 0; k < dim_; ++k) {
    const auto s = strides_[static_cast<std::size_t>(k)];
    j[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(index / s) + origin_;
    index %= s;
  }
  return j;
}

bool Cube::step(std::size_t index, int axis, int direction, std::size_t& out) const {
  const auto s = strides_[static_cast<std::size_t>(axis)];
  const auto coord = static_cast<std::int64_t>((index / s) % static_cast<std::size_t>(side_));
  const auto next = coord + direction;
  if (next < 0 || next >= side_) return false;
  out = direction > 0 ? index + s : index - s;
  return true;
}

std::vector<std::size_t> Cube::neighbours(std::size_t index) const {
  std::vector<std::size_t> out;
  out.reserve(2 * static_cast<std::size_t>(dim_));
  for (int axis = 0; axis < dim_; ++axis) {
    std::size_t k = 0;
    if (step(index, axis, -1, k)) out.push_back(k);
    if (step(index, axis, +1, k)) out.push_back(k);
  }
  return out;
}

std::vector<Site> sites(const Cube& cube) {
  std::vector<Site> out;
  out.reserve(cube.size());
  for (std::size_t i = 0; i < cube.size(); ++i) out.push_back(cube.site_at(i));
  return out;
}

int boundary_deficiency(const Cube& cube, const Site& j) {
  if (!cube.contains(j)) throw DomainError("boundary_deficiency: site outside cube");
  const auto inside = cube.neighbours(cube.index_of(j)).size();
  return 2 * cube.dim() - static_cast<int>(inside);
}

int parity(const Site& j) {
  const auto sum = std::accumulate(j.begin(), j.end(), std::int64_t{0});
  return (sum % 2 == 0) ? 1 : -1;
}

std::vector<double> parity_values(const Cube& cube) {
  std::vector<double> out(cube.size());
  for (std::size_t i = 0; i < cube.size(); ++i) out[i] = parity(cube.site_at(i));
  return out;
}

PeriodicPotential::PeriodicPotential(std::vector<std::int64_t> period, std::vector<double> values)
    : period_(std::move(period)), values_(std::move(values)) {
  std::size_t count = 1;
  for (auto p : period_) {
    if (p < 1) throw ConfigError("periodic potential: period entries must be positive");
    count *= static_cast<std::size_t>(p);
  }
  if (period_.empty() || values_.size() != count)
    throw ConfigError(fmt::format("periodic potential: expected {} values, got {}", count, values_.size()));
}

double PeriodicPotential::operator()(const Site& j) const {
  if (empty()) return 0.0;
  if (j.size() != period_.size()) throw DomainError("periodic potential: dimension mismatch");
  std::size_t idx = 0;
  for (std::size_t k = 0; k < period_.size(); ++k) {
    auto r = j[k] % period_[k];
    if (r < 0) r += period_[k];
    idx = idx * static_cast<std::size_t>(period_[k]) + static_cast<std::size_t>(r);
  }
  return values_[idx];
}

std::vector<double> PeriodicPotential::on(const Cube& cube) const {
  std::vector<double> out(cube.size(), 0.0);
  if (empty()) return out;
  for (std::size_t i = 0; i < cube.size(); ++i) out[i] = (*this)(cube.site_at(i));
  return out;
}

double PeriodicPotential::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double PeriodicPotential::min_value() const {
  if (values_.empty()) return 0.0;
  return *std::min_element(values_.begin(), values_.end());
}

}  // namespace rbo
