#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "absorb/grid.hpp"
#include "absorb/model.hpp"

namespace absorb {

// The discrete forward Kolmogorov operator
//   A p = sum_ij d2(a_ij p)/dx_i dx_j - sum_i d(f_i p)/dx_i
// frozen at one instant, stored as a fixed-width sparse row per node.
//
// Discretisation on the cell-centred grid:
//  * second differences of q = a_ii p; the absorbing wall sits half a cell
//    beyond the outermost node with q = 0 there, so a missing neighbour
//    contributes an extra -a_ii/h^2 on the diagonal;
//  * conservative first-order upwind fluxes for the drift, outflow only
//    through the wall;
//  * the four-point cross stencil for 2 d2(a_12 p)/dx dy, reading 0 outside.
// Without cross terms, -A has nonnegative diagonal, nonpositive off-diagonal
// entries and nonnegative column sums (an M-matrix after adding I/dt).
struct StencilOperator {
  DomainGrid grid;
  std::size_t width = 0;
  std::vector<std::uint32_t> cols;  // size() * width, column indices
  std::vector<double> coeff;        // size() * width, 0 for absent neighbours
  std::size_t bandwidth = 0;        // max |col - row|
  bool has_cross = false;

  std::size_t size() const { return grid.size(); }
};

StencilOperator assemble_operator(const DiffusionModel& model, const DomainGrid& grid, double t);

// y = A x. The serial version is the reference for the OpenMP kernel.
void apply_serial(const StencilOperator& op, std::span<const double> x, std::span<double> y);
void apply_parallel(const StencilOperator& op, std::span<const double> x, std::span<double> y);

// y = x + scale * A x
void apply_shifted(const StencilOperator& op, double scale, std::span<const double> x,
                   std::span<double> y);

DensityField apply_A(const DiffusionModel& model, const DomainGrid& grid,
                     const DensityField& field, double t);

}  // namespace absorb
