// Finite cubes of Z^d: site enumeration, neighbours, parity and
// boundary deficiency.
//
// Linear indexing is row-major over coordinates: the last coordinate varies
// fastest. Every matrix in the library is laid out with this ordering.
#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rbo {

using Site = std::vector<std::int64_t>;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class Cube {
 public:
  // Centred only when `centered` is set and the side is odd; otherwise the
  // coordinates run over {0, ..., L-1}.
  Cube(int dim, std::int64_t side, bool centered = false);

  int dim() const { return dim_; }
  std::int64_t side() const { return side_; }
  bool centered() const { return origin_ != 0; }
  std::size_t size() const { return size_; }

  // Smallest coordinate along each axis.
  std::int64_t origin() const { return origin_; }

  bool contains(const Site& j) const;
  std::size_t index_of(const Site& j) const;
  Site site_at(std::size_t index) const;

  // Linear indices of the lattice neighbours of `index` that lie inside the
  // cube. Order: axis 0 backward, axis 0 forward, axis 1 backward, ...
  std::vector<std::size_t> neighbours(std::size_t index) const;

  // Neighbour of `index` one step along `axis` (direction +1/-1), if inside.
  bool step(std::size_t index, int axis, int direction, std::size_t& out) const;

 private:
  int dim_;
  std::int64_t side_;
  std::int64_t origin_;
  std::size_t size_;
  std::vector<std::size_t> strides_;
};

std::vector<Site> sites(const Cube& cube);

// Number of lattice neighbours of j in Z^d \ cube.
int boundary_deficiency(const Cube& cube, const Site& j);

// (-1)^{j_1 + ... + j_d}
int parity(const Site& j);

// Per-site parity of a cube in linear order, as reals (+1/-1).
std::vector<double> parity_values(const Cube& cube);

class PeriodicPotential {
 public:
  PeriodicPotential() = default;
  // `values` has shape period[0] x ... x period[d-1], row-major.
  PeriodicPotential(std::vector<std::int64_t> period, std::vector<double> values);

  bool empty() const { return period_.empty(); }
  const std::vector<std::int64_t>& period() const { return period_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(const Site& j) const;

  // Evaluated on every site of the cube, linear order. Zero if empty.
  std::vector<double> on(const Cube& cube) const;

  double max_abs() const;
  double min_value() const;

 private:
  std::vector<std::int64_t> period_;
  std::vector<double> values_;
};

}  // namespace rbo
