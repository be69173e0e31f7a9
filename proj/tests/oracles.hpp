// Closed-form and brute-force reference values used by the tests. Nothing in
// here calls into the solver.
#pragma once

#include <cmath>
#include <numbers>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

// Principal Dirichlet eigenvalue of (1/2) d2/dx2 on (0,1).
inline constexpr double lambda1 = pi * pi / 2.0;

inline double eigen_decay(double t) { return std::exp(-lambda1 * t); }

// Heat kernel of dp/dt = D p'' on (0,1) with absorbing ends, by the method
// of images, truncated to |n| <= images.
inline double absorbed_kernel(double x, double y, double t, double D, int images = 10) {
  const double s2 = 4.0 * D * t;
  const double norm = 1.0 / std::sqrt(pi * s2);
  double g = 0.0;
  for (int n = -images; n <= images; ++n) {
    const double a = x - y + 2.0 * n;
    const double b = x + y + 2.0 * n;
    g += std::exp(-a * a / s2) - std::exp(-b * b / s2);
  }
  return norm * g;
}

// Kernel integrated over a source cell (c - h/2, c + h/2) by the composite
// midpoint rule with m sub-intervals, divided by h (initial density 1/h).
inline double absorbed_kernel_cell(double x, double c, double h, double t, double D,
                                   int m = 64) {
  double s = 0.0;
  for (int i = 0; i < m; ++i) {
    const double y = c - 0.5 * h + (i + 0.5) * h / m;
    s += absorbed_kernel(x, y, t, D);
  }
  return s / m;
}

// Binomial standard deviation of a count.
inline double binom_sd(double n, double p) { return std::sqrt(n * p * (1.0 - p)); }

}  // namespace oracle
