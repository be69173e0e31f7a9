#include <algorithm>
#include <cmath>
#include <vector>

#include "absorb/grid.hpp"
#include "absorb/linalg.hpp"

namespace absorb {

namespace {

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

}  // namespace

KrylovResult bicgstab(const LinearMap& m, std::span<const double> b, std::span<double> x,
                      double tol, std::size_t max_iter) {
  const std::size_t n = b.size();
  KrylovResult res;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  std::vector<double> r(n), r0(n), p(n, 0.0), v(n, 0.0), s(n), t(n);
  m(x, r);
  ++res.iterations;
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  r0 = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  res.relative_residual = norm2(r) / bnorm;
  while (res.relative_residual > tol && res.iterations < max_iter) {
    const double rho_new = dot(r0, r);
    if (rho_new == 0.0 || omega == 0.0) break;
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    m(p, v);
    ++res.iterations;
    const double r0v = dot(r0, v);
    if (r0v == 0.0) break;
    alpha = rho / r0v;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    if (norm2(s) / bnorm <= tol) {
      axpy(alpha, p, x);
      res.relative_residual = norm2(s) / bnorm;
      break;
    }
    m(s, t);
    ++res.iterations;
    const double tt = dot(t, t);
    omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i] + omega * s[i];
      r[i] = s[i] - omega * t[i];
    }
    res.relative_residual = norm2(r) / bnorm;
  }
  res.converged = res.relative_residual <= tol;
  return res;
}

KrylovResult gmres(const LinearMap& m, std::span<const double> b, std::span<double> x,
                   double tol, std::size_t restart, std::size_t max_iter) {
  const std::size_t n = b.size();
  KrylovResult res;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  std::vector<double> r(n), w(n);
  std::vector<std::vector<double>> basis;
  std::vector<std::vector<double>> hess;  // column-wise, (j+2) entries each
  std::vector<double> cs, sn, g;

  while (res.iterations < max_iter) {
    m(x, r);
    ++res.iterations;
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    const double beta = norm2(r);
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= tol) break;

    basis.assign(1, r);
    for (auto& v : basis[0]) v /= beta;
    hess.clear();
    cs.clear();
    sn.clear();
    g.assign(1, beta);

    std::size_t j = 0;
    for (; j < restart && res.iterations < max_iter; ++j) {
      m(basis[j], w);
      ++res.iterations;
      std::vector<double> hcol(j + 2, 0.0);
      for (std::size_t i = 0; i <= j; ++i) {  // modified Gram-Schmidt
        hcol[i] = dot(w, basis[i]);
        axpy(-hcol[i], basis[i], w);
      }
      hcol[j + 1] = norm2(w);
      for (std::size_t i = 0; i < j; ++i) {
        const double t = cs[i] * hcol[i] + sn[i] * hcol[i + 1];
        hcol[i + 1] = -sn[i] * hcol[i] + cs[i] * hcol[i + 1];
        hcol[i] = t;
      }
      const double denom = std::hypot(hcol[j], hcol[j + 1]);
      const double c = denom == 0.0 ? 1.0 : hcol[j] / denom;
      const double s = denom == 0.0 ? 0.0 : hcol[j + 1] / denom;
      const double hnext = hcol[j + 1];
      hcol[j] = denom;
      hcol[j + 1] = 0.0;
      cs.push_back(c);
      sn.push_back(s);
      g.push_back(-s * g[j]);
      g[j] *= c;
      hess.push_back(std::move(hcol));
      res.relative_residual = std::abs(g[j + 1]) / bnorm;
      if (hnext == 0.0 || res.relative_residual <= tol) {
        ++j;
        break;
      }
      basis.push_back(w);
      for (auto& v : basis.back()) v /= hnext;
    }
    // back substitution for the least-squares coefficients
    std::vector<double> y(j, 0.0);
    for (std::size_t i = j; i-- > 0;) {
      double s = g[i];
      for (std::size_t k = i + 1; k < j; ++k) s -= hess[k][i] * y[k];
      y[i] = s / hess[i][i];
    }
    for (std::size_t i = 0; i < j; ++i) axpy(y[i], basis[i], x);
    if (res.relative_residual <= tol) {
      // confirm with the true residual
      m(x, r);
      ++res.iterations;
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
      res.relative_residual = norm2(r) / bnorm;
      if (res.relative_residual <= tol) break;
    }
  }
  res.converged = res.relative_residual <= tol;
  return res;
}

}  // namespace absorb
