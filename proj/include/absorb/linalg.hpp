#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "absorb/stencil.hpp"

namespace absorb {

// Band LU of I - scale * A without pivoting. For the monotone stencil the
// matrix is an M-matrix: every pivot is positive and the factors keep their
// signs, so a nonnegative right-hand side yields a nonnegative solution in
// floating point as well.
class BandedLU {
 public:
  // Throws Error(LinearSolveFailure) on a non-positive or non-finite pivot.
  BandedLU(const StencilOperator& op, double scale);

  std::size_t size() const { return n_; }
  void solve(std::span<double> rhs) const;

 private:
  double& at(std::size_t r, std::size_t c) { return band_[r * stride_ + (c + w_ - r)]; }
  double at(std::size_t r, std::size_t c) const { return band_[r * stride_ + (c + w_ - r)]; }

  std::size_t n_ = 0;
  std::size_t w_ = 0;
  std::size_t stride_ = 0;
  std::vector<double> band_;
};

using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

struct KrylovResult {
  std::size_t iterations = 0;  // operator applications
  double relative_residual = 0.0;
  bool converged = false;
};

// Solves M x = b starting from the incoming x.
KrylovResult bicgstab(const LinearMap& m, std::span<const double> b, std::span<double> x,
                      double tol, std::size_t max_iter);

// Restarted GMRES(restart) for M x = b starting from the incoming x.
KrylovResult gmres(const LinearMap& m, std::span<const double> b, std::span<double> x,
                   double tol, std::size_t restart, std::size_t max_iter);

}  // namespace absorb
