#include "absorb/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "absorb/errors.hpp"

namespace absorb {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EllipticityViolation: return "EllipticityViolation";
    case ErrorKind::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::GammaZero: return "GammaZero";
    case ErrorKind::GammaNegative: return "GammaNegative";
    case ErrorKind::NegativityViolation: return "NegativityViolation";
    case ErrorKind::ResidualTooLarge: return "ResidualTooLarge";
    case ErrorKind::NotADensity: return "NotADensity";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Config: return "ConfigError";
  }
  return "Unknown";
}

DomainGrid make_grid(int dim, std::span<const double> lo, std::span<const double> hi,
                     std::span<const std::size_t> n_cells) {
  if (dim != 1 && dim != 2) {
    throw Error(ErrorKind::InvalidArgument, "grid dimension must be 1 or 2");
  }
  const auto d = static_cast<std::size_t>(dim);
  if (lo.size() != d || hi.size() != d || n_cells.size() != d) {
    throw Error(ErrorKind::InvalidArgument, "grid corner/size arrays must have length dim");
  }
  DomainGrid g;
  g.dim_ = dim;
  for (std::size_t a = 0; a < d; ++a) {
    if (!(hi[a] > lo[a]) || !std::isfinite(lo[a]) || !std::isfinite(hi[a])) {
      std::ostringstream os;
      os << "degenerate box on axis " << a << ": [" << lo[a] << ", " << hi[a] << "]";
      throw Error(ErrorKind::InvalidArgument, os.str());
    }
    if (n_cells[a] < 4) {
      throw Error(ErrorKind::InvalidArgument, "at least 4 cells are required on every axis");
    }
    g.lo_[a] = lo[a];
    g.hi_[a] = hi[a];
    g.n_[a] = n_cells[a];
    g.h_[a] = (hi[a] - lo[a]) / static_cast<double>(n_cells[a]);
  }
  if (dim == 1) {
    g.lo_[1] = 0.0;
    g.hi_[1] = 1.0;
    g.n_[1] = 1;
    g.h_[1] = 1.0;
  }
  return g;
}

DomainGrid make_interval(double lo, double hi, std::size_t n_cells) {
  const double l[] = {lo};
  const double u[] = {hi};
  const std::size_t n[] = {n_cells};
  return make_grid(1, l, u, n);
}

double DomainGrid::cell_volume() const { return dim_ == 1 ? h_[0] : h_[0] * h_[1]; }

double DomainGrid::volume() const {
  double v = hi_[0] - lo_[0];
  if (dim_ == 2) v *= hi_[1] - lo_[1];
  return v;
}

Point DomainGrid::node(std::size_t k) const {
  const auto m = unflatten(k);
  return {coord(0, m[0]), dim_ == 2 ? coord(1, m[1]) : 0.0};
}

bool DomainGrid::contains(const Point& p) const {
  for (int a = 0; a < dim_; ++a) {
    if (!(p[a] > lo_[a] && p[a] < hi_[a])) return false;
  }
  return true;
}

std::size_t DomainGrid::locate(const Point& p) const {
  MultiIndex m{0, 0};
  for (int a = 0; a < dim_; ++a) {
    const double r = (p[a] - lo_[a]) / h_[a];
    const auto i = static_cast<std::size_t>(std::max(0.0, std::floor(r)));
    m[a] = std::min(i, n_[a] - 1);
  }
  return flatten(m);
}

bool DomainGrid::same_shape(const DomainGrid& o) const {
  return dim_ == o.dim_ && n_ == o.n_ && lo_ == o.lo_ && hi_ == o.hi_;
}

DensityField::DensityField(const DomainGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw Error(ErrorKind::ShapeMismatch, "field has " + std::to_string(values_.size()) +
                                              " values, grid has " +
                                              std::to_string(grid_.size()) + " nodes");
  }
}

DensityField& DensityField::operator+=(const DensityField& o) {
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

DensityField& DensityField::operator-=(const DensityField& o) {
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

DensityField& DensityField::operator*=(double s) {
  for (auto& v : values_) v *= s;
  return *this;
}

DensityField operator+(DensityField a, const DensityField& b) { return a += b; }
DensityField operator-(DensityField a, const DensityField& b) { return a -= b; }
DensityField operator*(double s, DensityField a) { return a *= s; }

double mass(const DensityField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.grid().cell_volume();
}

double norm_l1(const DensityField& f) {
  double s = 0.0;
  for (double v : f.values()) s += std::abs(v);
  return s * f.grid().cell_volume();
}

double norm_l2(const DensityField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v * v;
  return std::sqrt(s * f.grid().cell_volume());
}

double norm_sup(const DensityField& f) {
  double s = 0.0;
  for (double v : f.values()) s = std::max(s, std::abs(v));
  return s;
}

double min_value(const DensityField& f) {
  double m = f.size() ? f[0] : 0.0;
  for (double v : f.values()) m = std::min(m, v);
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace absorb
