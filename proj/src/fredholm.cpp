#include "absorb/fredholm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "absorb/errors.hpp"

namespace absorb {

const char* to_string(ResolventMethod m) {
  return m == ResolventMethod::Neumann ? "neumann" : "krylov";
}

SolutionOperator::SolutionOperator(const DiffusionModel& model, const DomainGrid& grid,
                                   const SolverConfig& config, double T)
    : propagator_(model, grid, config, 0.0, T), T_(T) {}

LinearMap SolutionOperator::as_map() const {
  return [this](std::span<const double> x, std::span<double> y) {
    const DensityField out =
        propagator_.advance(DensityField(grid(), std::vector<double>(x.begin(), x.end())));
    std::copy(out.values().begin(), out.values().end(), y.begin());
  };
}

DensityField apply_Q(const DiffusionModel& model, const DomainGrid& grid,
                     const SolverConfig& config, const DensityField& xi, double T) {
  return SolutionOperator(model, grid, config, T).apply(xi);
}

namespace {

OperatorMatrix assemble_impl(const DiffusionModel& model, const DomainGrid& grid,
                             const SolverConfig& config, double T, std::size_t cap,
                             bool parallel) {
  const std::size_t n = grid.size();
  if (n > cap) {
    throw Error(ErrorKind::CapExceeded, "dense assembly of " + std::to_string(n) +
                                            " columns exceeds the cap of " + std::to_string(cap));
  }
  const Propagator prop(model, grid, config, 0.0, T);
  OperatorMatrix out;
  out.grid = grid;
  out.scheme = config.scheme;
  out.T = T;
  out.q.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

  const auto column = [&](std::size_t j) {
    DensityField e(grid);
    e[j] = 1.0;
    const DensityField col = prop.advance(e);
    for (std::size_t i = 0; i < n; ++i) {
      out.q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
  };

  if (!parallel) {
    for (std::size_t j = 0; j < n; ++j) column(j);
    return out;
  }
  // Exceptions must not escape the parallel region.
  std::exception_ptr failure;
  const auto cols = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < cols; ++j) {
    try {
      column(static_cast<std::size_t>(j));
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace

OperatorMatrix assemble_Q(const DiffusionModel& model, const DomainGrid& grid,
                          const SolverConfig& config, double T, std::size_t cap) {
  return assemble_impl(model, grid, config, T, cap, true);
}

OperatorMatrix assemble_Q_serial(const DiffusionModel& model, const DomainGrid& grid,
                                 const SolverConfig& config, double T, std::size_t cap) {
  return assemble_impl(model, grid, config, T, cap, false);
}

SpectralEstimate spectral_radius(const LinearMap& q, std::size_t n, double tol,
                                 std::size_t max_iter) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
  SpectralEstimate est;
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n))), w(n);
  double prev_growth = -1.0;
  double prev_estimate = -1.0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    q(v, w);
    est.iterations = it;
    const double growth = norm2(w);
    est.rayleigh = dot(v, w);
    if (growth == 0.0) {
      est.radius = 0.0;
      est.converged = true;
      return est;
    }
    est.radius = prev_growth < 0.0 ? growth : std::sqrt(growth * prev_growth);
    if (prev_estimate >= 0.0 && std::abs(est.radius - prev_estimate) <= tol * est.radius) {
      est.converged = true;
      return est;
    }
    prev_estimate = est.radius;
    prev_growth = growth;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / growth;
  }
  return est;
}

SpectralEstimate spectral_radius(const OperatorMatrix& q, double tol, std::size_t max_iter) {
  const LinearMap map = [&q](std::span<const double> x, std::span<double> y) {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::Map<Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    yv.noalias() = q.q * xv;
  };
  return spectral_radius(map, q.size(), tol, max_iter);
}

ResolventReport solve_resolvent(const SolutionOperator& q, const DensityField& gamma,
                                const ResolventOptions& opt) {
  if (!(opt.tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
  for (double v : gamma.values()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "gamma is not finite");
  }
  const DomainGrid& grid = q.grid();
  ResolventReport rep;
  rep.method = ResolventMethod::Neumann;
  const double gnorm = norm2(gamma.values());
  if (gnorm == 0.0) {
    rep.zeta = DensityField(grid);
    rep.iterations = 1;
    rep.residual_norm = 0.0;
    return rep;
  }

  DensityField zeta = gamma;
  std::vector<double> ratios;
  double last = -1.0;
  bool stalled = false;
  while (rep.iterations < opt.max_iter) {
    const DensityField qz = q.apply(zeta);
    ++rep.iterations;
    // residual zeta - Q zeta - gamma, and the next iterate gamma + Q zeta
    DensityField next = gamma + qz;
    const DensityField diff = zeta - next;
    const double res = norm2(diff.values()) / gnorm;
    rep.zeta = zeta;
    rep.residual_norm = res;
    if (res <= opt.tol) return rep;
    if (last > 0.0) ratios.push_back(res / last);
    last = res;
    zeta = std::move(next);
    if (ratios.size() >= opt.stall_window &&
        std::all_of(ratios.end() - static_cast<std::ptrdiff_t>(opt.stall_window), ratios.end(),
                    [&](double r) { return r >= opt.stall_ratio; })) {
      stalled = true;
      break;
    }
  }

  if (stalled || !std::isfinite(rep.residual_norm)) {
    rep.method = ResolventMethod::Krylov;
    const LinearMap qmap = q.as_map();
    const std::size_t n = grid.size();
    std::vector<double> scratch(n);
    std::size_t applications = 0;
    const LinearMap i_minus_q = [&](std::span<const double> x, std::span<double> y) {
      qmap(x, scratch);
      ++applications;
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] - scratch[i];
    };
    std::vector<double> x(zeta.values().begin(), zeta.values().end());
    if (!std::isfinite(norm2(x))) std::copy(gamma.values().begin(), gamma.values().end(), x.begin());
    const std::size_t budget = opt.max_iter > rep.iterations ? opt.max_iter - rep.iterations : 0;
    const KrylovResult kr = gmres(i_minus_q, gamma.values(), x, opt.tol, opt.krylov_restart, budget);
    rep.iterations += applications;
    rep.zeta = DensityField(grid, std::move(x));
    rep.residual_norm = kr.relative_residual;
    if (kr.converged) return rep;
  }

  std::ostringstream os;
  os << "resolvent solve stopped at relative residual " << rep.residual_norm << " after "
     << rep.iterations << " applications of Q; the spectral radius of Q is close to 1";
  throw Error(ErrorKind::NoConvergence, os.str());
}

ResolventReport solve_resolvent(const DiffusionModel& model, const DomainGrid& grid,
                                const SolverConfig& config, double T, const DensityField& gamma,
                                double tol, std::size_t max_iter) {
  ResolventOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  return solve_resolvent(SolutionOperator(model, grid, config, T), gamma, opt);
}

DensityField solve_resolvent_dense(const OperatorMatrix& q, const DensityField& gamma) {
  const auto n = static_cast<Eigen::Index>(q.size());
  if (gamma.size() != q.size()) {
    throw Error(ErrorKind::ShapeMismatch, "gamma does not match the operator size");
  }
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - q.q;
  Eigen::Map<const Eigen::VectorXd> g(gamma.values().data(), n);
  const Eigen::VectorXd z = m.partialPivLu().solve(g);
  return DensityField(q.grid, std::vector<double>(z.data(), z.data() + n));
}

Eigen::VectorXd singular_values(const OperatorMatrix& q) {
  return Eigen::BDCSVD<Eigen::MatrixXd>(q.q).singularValues();
}

}  // namespace absorb
