#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace absorb {

using Point = std::array<double, 2>;
using MultiIndex = std::array<std::size_t, 2>;

// Uniform cell-centred tensor grid on an interval or an axis-aligned
// rectangle. Unused axes (dim == 1) carry n_cells == 1 and are ignored.
// The absorbing boundary lies half a cell outside the outermost nodes.
class DomainGrid {
 public:
  DomainGrid() = default;

  int dim() const { return dim_; }
  double lo(int axis) const { return lo_[axis]; }
  double hi(int axis) const { return hi_[axis]; }
  std::size_t n_cells(int axis) const { return n_[axis]; }
  double h(int axis) const { return h_[axis]; }

  // Number of interior unknowns.
  std::size_t size() const { return n_[0] * n_[1]; }
  double cell_volume() const;
  double volume() const;

  // x runs fastest.
  std::size_t flatten(MultiIndex m) const { return m[0] + n_[0] * m[1]; }
  MultiIndex unflatten(std::size_t k) const { return {k % n_[0], k / n_[0]}; }

  double coord(int axis, std::size_t i) const {
    return lo_[axis] + (static_cast<double>(i) + 0.5) * h_[axis];
  }
  Point node(std::size_t k) const;

  // True when p lies strictly inside the open box.
  bool contains(const Point& p) const;
  // Flat index of the cell containing p (p must be inside).
  std::size_t locate(const Point& p) const;

  bool same_shape(const DomainGrid& other) const;

  friend DomainGrid make_grid(int, std::span<const double>, std::span<const double>,
                              std::span<const std::size_t>);

 private:
  int dim_ = 1;
  std::array<double, 2> lo_{0.0, 0.0};
  std::array<double, 2> hi_{1.0, 1.0};
  std::array<std::size_t, 2> n_{4, 1};
  std::array<double, 2> h_{0.25, 1.0};
};

// Throws Error(InvalidArgument) for dim outside {1,2}, hi <= lo, or fewer
// than 4 cells on an axis.
DomainGrid make_grid(int dim, std::span<const double> lo, std::span<const double> hi,
                     std::span<const std::size_t> n_cells);

// Convenience for the common unit-interval case.
DomainGrid make_interval(double lo, double hi, std::size_t n_cells);

// Real values on the interior nodes of a grid at a single time.
class DensityField {
 public:
  DensityField() = default;
  explicit DensityField(const DomainGrid& grid) : grid_(grid), values_(grid.size(), 0.0) {}
  DensityField(const DomainGrid& grid, std::vector<double> values);

  const DomainGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  DensityField& operator+=(const DensityField& other);
  DensityField& operator-=(const DensityField& other);
  DensityField& operator*=(double s);

 private:
  DomainGrid grid_;
  std::vector<double> values_;
};

DensityField operator+(DensityField a, const DensityField& b);
DensityField operator-(DensityField a, const DensityField& b);
DensityField operator*(double s, DensityField a);

template <class F>
DensityField sample(const DomainGrid& grid, F&& fn) {
  DensityField out(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] = fn(grid.node(k));
  return out;
}

// Midpoint-rule quadrature.
double mass(const DensityField& field);
double norm_l1(const DensityField& field);
double norm_l2(const DensityField& field);
double norm_sup(const DensityField& field);
double min_value(const DensityField& field);

// Plain Euclidean helpers on raw node vectors.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace absorb
