#include "absorb/stencil.hpp"

#include <algorithm>
#include <cmath>

#include "absorb/errors.hpp"

namespace absorb {

namespace {

constexpr std::size_t kParallelThreshold = 2048;

struct Row {
  std::uint32_t* cols;
  double* coeff;
  std::size_t used = 0;
  std::size_t self;

  void add(std::size_t col, double c) {
    for (std::size_t s = 0; s < used; ++s) {
      if (cols[s] == col) {
        coeff[s] += c;
        return;
      }
    }
    cols[used] = static_cast<std::uint32_t>(col);
    coeff[used] = c;
    ++used;
  }
};

}  // namespace

StencilOperator assemble_operator(const DiffusionModel& model, const DomainGrid& grid, double t) {
  if (model.dim() != grid.dim()) {
    throw Error(ErrorKind::InvalidArgument, "model and grid dimensions differ");
  }
  const int dim = grid.dim();
  const std::size_t n = grid.size();
  StencilOperator op;
  op.grid = grid;
  op.width = dim == 1 ? 3 : 9;
  op.cols.assign(n * op.width, 0);
  op.coeff.assign(n * op.width, 0.0);

  std::vector<Mat2> a(n);
  std::vector<Vec2> f(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Point x = grid.node(k);
    a[k] = eval_a(model, x, t);
    f[k] = model.drift(x, t);
    if (dim == 2 && a[k][0][1] != 0.0) op.has_cross = true;
  }

  const std::array<std::size_t, 2> extent{grid.n_cells(0), grid.n_cells(1)};
  for (std::size_t k = 0; k < n; ++k) {
    Row row{&op.cols[k * op.width], &op.coeff[k * op.width], 0, k};
    row.add(k, 0.0);
    const MultiIndex m = grid.unflatten(k);
    for (int axis = 0; axis < dim; ++axis) {
      const double h = grid.h(axis);
      const double inv_h2 = 1.0 / (h * h);
      const bool has_lo = m[axis] > 0;
      const bool has_hi = m[axis] + 1 < extent[axis];
      MultiIndex lo = m, hi = m;
      if (has_lo) --lo[axis];
      if (has_hi) ++hi[axis];
      const std::size_t kl = grid.flatten(lo), kh = grid.flatten(hi);

      // diffusion
      const double aii = a[k][axis][axis];
      row.add(k, -2.0 * aii * inv_h2);
      if (has_lo) row.add(kl, a[kl][axis][axis] * inv_h2);
      else row.add(k, -aii * inv_h2);
      if (has_hi) row.add(kh, a[kh][axis][axis] * inv_h2);
      else row.add(k, -aii * inv_h2);

      // drift: -(F_{+1/2} - F_{-1/2}) / h with upwind node fluxes
      const double fk = f[k][axis];
      row.add(k, -std::abs(fk) / h);
      if (has_hi) row.add(kh, -std::min(f[kh][axis], 0.0) / h);
      if (has_lo) row.add(kl, std::max(f[kl][axis], 0.0) / h);
    }
    if (op.has_cross) {
      const double scale = 2.0 / (4.0 * grid.h(0) * grid.h(1));
      for (int dx : {-1, 1}) {
        for (int dy : {-1, 1}) {
          const auto i = static_cast<std::ptrdiff_t>(m[0]) + dx;
          const auto j = static_cast<std::ptrdiff_t>(m[1]) + dy;
          if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(extent[0]) ||
              j >= static_cast<std::ptrdiff_t>(extent[1]))
            continue;
          const std::size_t kk = grid.flatten({static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
          row.add(kk, (dx == dy ? 1.0 : -1.0) * scale * a[kk][0][1]);
        }
      }
    }
    for (std::size_t s = row.used; s < op.width; ++s) {
      row.cols[s] = static_cast<std::uint32_t>(k);
      row.coeff[s] = 0.0;
    }
    for (std::size_t s = 0; s < row.used; ++s) {
      const auto c = static_cast<std::size_t>(row.cols[s]);
      op.bandwidth = std::max(op.bandwidth, c > k ? c - k : k - c);
    }
  }
  return op;
}

void apply_serial(const StencilOperator& op, std::span<const double> x, std::span<double> y) {
  const std::size_t n = op.size(), w = op.width;
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < w; ++j) s += op.coeff[k * w + j] * x[op.cols[k * w + j]];
    y[k] = s;
  }
}

void apply_parallel(const StencilOperator& op, std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(op.size());
  const std::size_t w = op.width;
  const double* c = op.coeff.data();
  const std::uint32_t* cols = op.cols.data();
  const double* xs = x.data();
  double* ys = y.data();
#pragma omp parallel for schedule(static) if (op.size() >= kParallelThreshold)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    double s = 0.0;
    const std::size_t base = static_cast<std::size_t>(k) * w;
    for (std::size_t j = 0; j < w; ++j) s += c[base + j] * xs[cols[base + j]];
    ys[k] = s;
  }
}

void apply_shifted(const StencilOperator& op, double scale, std::span<const double> x,
                   std::span<double> y) {
  apply_parallel(op, x, y);
  for (std::size_t k = 0; k < op.size(); ++k) y[k] = x[k] + scale * y[k];
}

DensityField apply_A(const DiffusionModel& model, const DomainGrid& grid,
                     const DensityField& field, double t) {
  if (field.size() != grid.size()) {
    throw Error(ErrorKind::ShapeMismatch, "field does not live on the operator grid");
  }
  const StencilOperator op = assemble_operator(model, grid, t);
  DensityField out(grid);
  apply_parallel(op, field.values(), out.values());
  return out;
}

}  // namespace absorb
