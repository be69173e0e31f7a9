#include "absorb/seedpipe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "absorb/errors.hpp"

namespace absorb {

const char* to_string(GammaKind kind) {
  switch (kind) {
    case GammaKind::Eigenmode: return "eigenmode";
    case GammaKind::Bump: return "bump";
    case GammaKind::Tiles: return "tiles";
    case GammaKind::Csv: return "csv";
  }
  return "unknown";
}

namespace {

std::size_t tile_index(const std::vector<double>& breaks, double x) {
  const auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - breaks.begin() - 1, 0));
  return std::min(i, breaks.size() - 2);
}

void check_tiles(const GammaSpec& spec, const DomainGrid& grid) {
  std::size_t count = 1;
  for (int a = 0; a < grid.dim(); ++a) {
    const auto& b = spec.breaks[a];
    if (b.size() < 2) {
      throw Error(ErrorKind::InvalidArgument, "tiles need at least two breakpoints per axis");
    }
    const double tol = 1e-12 * (grid.hi(a) - grid.lo(a));
    if (std::abs(b.front() - grid.lo(a)) > tol || std::abs(b.back() - grid.hi(a)) > tol) {
      throw Error(ErrorKind::InvalidArgument, "tile breakpoints must start at lo and end at hi");
    }
    if (!std::is_sorted(b.begin(), b.end(), std::less_equal<>{})) {
      throw Error(ErrorKind::InvalidArgument, "tile breakpoints must be strictly increasing");
    }
    count *= b.size() - 1;
  }
  if (spec.tile_values.size() != count) {
    throw Error(ErrorKind::InvalidArgument, "expected " + std::to_string(count) +
                                                " tile values, got " +
                                                std::to_string(spec.tile_values.size()));
  }
}

}  // namespace

TargetProfile realize_gamma(const GammaSpec& spec, const DomainGrid& grid) {
  TargetProfile out{spec, DensityField(grid)};
  DensityField& f = out.field;
  const int dim = grid.dim();
  switch (spec.kind) {
    case GammaKind::Eigenmode:
      f = sample(grid, [&](const Point& x) {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) {
          v *= std::sin(std::numbers::pi * (x[a] - grid.lo(a)) / (grid.hi(a) - grid.lo(a)));
        }
        return v;
      });
      break;
    case GammaKind::Bump:
      for (int a = 0; a < dim; ++a) {
        if (!(spec.hi[a] > spec.lo[a])) {
          throw Error(ErrorKind::InvalidArgument, "bump box is degenerate");
        }
      }
      f = sample(grid, [&](const Point& x) {
        for (int a = 0; a < dim; ++a) {
          if (!(x[a] > spec.lo[a] && x[a] < spec.hi[a])) return 0.0;
        }
        return spec.value;
      });
      break;
    case GammaKind::Tiles: {
      check_tiles(spec, grid);
      for (double v : spec.tile_values) {
        if (v < 0.0) {
          std::ostringstream os;
          os << "tile value " << v << " is negative; gamma must be nonnegative";
          throw Error(ErrorKind::GammaNegative, os.str());
        }
      }
      const std::size_t nx = spec.breaks[0].size() - 1;
      f = sample(grid, [&](const Point& x) {
        const std::size_t i = tile_index(spec.breaks[0], x[0]);
        const std::size_t j = dim == 2 ? tile_index(spec.breaks[1], x[1]) : 0;
        return spec.tile_values[i + nx * j];
      });
      break;
    }
    case GammaKind::Csv:
      f = DensityField(grid, spec.samples);
      break;
  }
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!std::isfinite(f[k])) throw Error(ErrorKind::InvalidArgument, "gamma is not finite");
    if (f[k] < 0.0) {
      std::ostringstream os;
      os << "gamma is negative (" << f[k] << ") at node " << k
         << "; gamma must be nonnegative";
      throw Error(ErrorKind::GammaNegative, os.str());
    }
  }
  if (norm_sup(f) == 0.0) {
    throw Error(ErrorKind::GammaZero, "gamma is identically zero; it must not vanish");
  }
  return out;
}

double decrement_residual(const DensityField& rho, const DensityField& rho_T, double alpha,
                          const DensityField& gamma) {
  double worst = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    worst = std::max(worst, std::abs(rho[k] - rho_T[k] - alpha * gamma[k]));
  }
  return worst / norm_sup(gamma);
}

SeedSolution run_seed(const DiffusionModel& model, const DomainGrid& grid,
                      const SolverConfig& config, const TargetProfile& gamma,
                      const SeedOptions& opt) {
  if (config.scheme != Scheme::ImplicitEuler && !opt.allow_non_monotone) {
    throw Error(ErrorKind::InvalidArgument,
                "the seed construction needs the monotone implicit-euler scheme");
  }
  if (!gamma.field.grid().same_shape(grid)) {
    throw Error(ErrorKind::ShapeMismatch, "gamma does not live on the solver grid");
  }
  const SolutionOperator q(model, grid, config, opt.T);

  SeedSolution sol;
  sol.gamma = gamma;
  ResolventOptions ropt;
  ropt.tol = opt.resolvent_tol;
  ropt.max_iter = opt.resolvent_max_iter;
  sol.report = solve_resolvent(q, gamma.field, ropt);
  sol.zeta = sol.report.zeta;

  sol.u0 = sol.zeta;
  const double eps_neg = opt.eps_neg_rel * norm_sup(sol.u0);
  sol.negativity = std::min(0.0, min_value(sol.u0));
  if (sol.negativity < -eps_neg) {
    std::ostringstream os;
    os << "u(.,0) reaches " << sol.negativity << " (allowed " << -eps_neg
       << "); refine the grid or check the model";
    throw Error(ErrorKind::NegativityViolation, os.str());
  }
  for (auto& v : sol.u0.values()) {
    if (v < 0.0) {
      v = 0.0;
      ++sol.clamped;
    }
  }
  sol.uT = q.apply(sol.u0);
  sol.alpha = 1.0 / mass(sol.u0);
  sol.rho = sol.alpha * sol.u0;

  const Trajectory p = q.propagator().evolve(sol.rho);
  sol.mass_curve = mass_curve(p);
  sol.residual = decrement_residual(p.fields.front(), p.fields.back(), sol.alpha, gamma.field);
  if (!(sol.residual <= opt.residual_tol)) {
    std::ostringstream os;
    os << "decrement residual " << sol.residual << " exceeds " << opt.residual_tol;
    throw Error(ErrorKind::ResidualTooLarge, os.str());
  }
  return sol;
}

VerificationReport verify_seed(const SeedSolution& sol, const DiffusionModel& model,
                               const DomainGrid& grid, const SolverConfig& config,
                               const SeedOptions& opt) {
  VerificationReport rep;
  const DensityField& gamma = sol.gamma.field;
  auto rerun = [&](std::size_t steps) {
    SolverConfig c = config;
    c.n_steps = std::max<std::size_t>(1, steps);
    return Propagator(model, grid, c, 0.0, opt.T);
  };

  rep.residual_same =
      decrement_residual(sol.rho, rerun(config.n_steps).advance(sol.rho), sol.alpha, gamma);
  rep.residual_coarse =
      decrement_residual(sol.rho, rerun(config.n_steps / 2).advance(sol.rho), sol.alpha, gamma);

  const Trajectory fine = rerun(2 * config.n_steps).evolve(sol.rho);
  rep.residual_refined =
      decrement_residual(fine.fields.front(), fine.fields.back(), sol.alpha, gamma);
  rep.mass_curve = mass_curve(fine);
  rep.mass_strictly_decreasing = true;
  for (std::size_t k = 1; k < rep.mass_curve.size(); ++k) {
    if (!(rep.mass_curve[k].second < rep.mass_curve[k - 1].second)) {
      rep.mass_strictly_decreasing = false;
    }
  }
  rep.decrement = fine.fields.front() - fine.fields.back();
  rep.passed = rep.residual_same <= opt.residual_tol && rep.mass_strictly_decreasing;
  return rep;
}

}  // namespace absorb
