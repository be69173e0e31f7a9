#include <algorithm>
#include <cmath>
#include <sstream>

#include "absorb/errors.hpp"
#include "absorb/linalg.hpp"

namespace absorb {

BandedLU::BandedLU(const StencilOperator& op, double scale)
    : n_(op.size()), w_(std::max<std::size_t>(op.bandwidth, 1)), stride_(2 * w_ + 1),
      band_(n_ * stride_, 0.0) {
  for (std::size_t r = 0; r < n_; ++r) {
    at(r, r) += 1.0;
    for (std::size_t s = 0; s < op.width; ++s) {
      const double c = op.coeff[r * op.width + s];
      if (c != 0.0) at(r, op.cols[r * op.width + s]) -= scale * c;
    }
  }
  for (std::size_t k = 0; k < n_; ++k) {
    const double pivot = at(k, k);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      std::ostringstream os;
      os << "band factorisation hit pivot " << pivot << " at row " << k
         << "; reduce the time step or use the iterative solver";
      throw Error(ErrorKind::LinearSolveFailure, os.str());
    }
    const std::size_t last = std::min(n_ - 1, k + w_);
    for (std::size_t i = k + 1; i <= last; ++i) {
      double& lik = at(i, k);
      if (lik == 0.0) continue;
      lik /= pivot;
      for (std::size_t j = k + 1; j <= last; ++j) at(i, j) -= lik * at(k, j);
    }
  }
}

void BandedLU::solve(std::span<double> x) const {
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t first = i > w_ ? i - w_ : 0;
    double s = x[i];
    for (std::size_t j = first; j < i; ++j) s -= at(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t i = n_; i-- > 0;) {
    const std::size_t last = std::min(n_ - 1, i + w_);
    double s = x[i];
    for (std::size_t j = i + 1; j <= last; ++j) s -= at(i, j) * x[j];
    x[i] = s / at(i, i);
  }
}

}  // namespace absorb
