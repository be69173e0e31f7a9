#include "absorb/kolmogorov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "absorb/errors.hpp"

namespace absorb {

const char* to_string(Scheme scheme) {
  return scheme == Scheme::ImplicitEuler ? "implicit-euler" : "crank-nicolson";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "implicit-euler") return Scheme::ImplicitEuler;
  if (name == "crank-nicolson") return Scheme::CrankNicolson;
  throw Error(ErrorKind::InvalidArgument, "unknown scheme '" + name + "'");
}

void validate(const SolverConfig& c) {
  if (c.n_steps < 1) throw Error(ErrorKind::InvalidArgument, "n_steps must be at least 1");
  if (!(c.linear_solver_tol > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "linear_solver_tol must be positive");
  }
  if (c.linear_solver_max_iter < 1) {
    throw Error(ErrorKind::InvalidArgument, "linear_solver_max_iter must be at least 1");
  }
}

Propagator::Propagator(const DiffusionModel& model, const DomainGrid& grid,
                       const SolverConfig& config, double s, double T)
    : model_(std::make_shared<const DiffusionModel>(model)), grid_(grid), config_(config), s_(s),
      T_(T) {
  validate(config);
  if (!(T > s)) throw Error(ErrorKind::InvalidArgument, "evolution needs s < T");
  if (model.dim() != grid.dim()) {
    throw Error(ErrorKind::InvalidArgument, "model and grid dimensions differ");
  }
  dt_ = (T - s) / static_cast<double>(config.n_steps);
  const double theta = config.scheme == Scheme::ImplicitEuler ? 1.0 : 0.5;
  if (!model.time_dependent()) {
    frozen_ = make_step(s + theta * dt_);
    certified_ = config.scheme == Scheme::ImplicitEuler && !frozen_->op.has_cross;
  } else {
    // sample every evaluation instant once to decide the flag
    bool cross = false;
    for (std::size_t k = 0; k < config.n_steps && !cross; ++k) {
      cross = assemble_operator(model, grid, time(k) + theta * dt_).has_cross;
    }
    certified_ = config.scheme == Scheme::ImplicitEuler && !cross;
  }
}

Propagator::Step Propagator::make_step(double t_eval) const {
  Step step{assemble_operator(*model_, grid_, t_eval), std::nullopt};
  const double theta = config_.scheme == Scheme::ImplicitEuler ? 1.0 : 0.5;
  if (config_.linear_solver == LinearSolver::Direct) step.lu.emplace(step.op, theta * dt_);
  return step;
}

void Propagator::take_step(const Step& step, std::vector<double>& p,
                           std::vector<double>& work) const {
  const double theta = config_.scheme == Scheme::ImplicitEuler ? 1.0 : 0.5;
  if (config_.scheme == Scheme::CrankNicolson) {
    apply_shifted(step.op, (1.0 - theta) * dt_, p, work);
  } else {
    work = p;
  }
  if (step.lu) {
    step.lu->solve(work);
    p.swap(work);
    return;
  }
  const double scale = theta * dt_;
  LinearMap m = [&step, scale](std::span<const double> x, std::span<double> y) {
    apply_shifted(step.op, -scale, x, y);
  };
  // previous field is the initial guess
  const KrylovResult r =
      bicgstab(m, work, p, config_.linear_solver_tol, config_.linear_solver_max_iter);
  if (!r.converged) {
    std::ostringstream os;
    os << "inner solve stopped at relative residual " << r.relative_residual << " after "
       << r.iterations << " iterations (tol " << config_.linear_solver_tol
       << "); reduce the time step or relax the tolerance";
    throw Error(ErrorKind::LinearSolveFailure, os.str());
  }
}

void Propagator::march(
    const DensityField& rho,
    const std::function<void(std::size_t, std::span<const double>)>& visit) const {
  if (!rho.grid().same_shape(grid_)) {
    throw Error(ErrorKind::ShapeMismatch, "initial field does not live on the solver grid");
  }
  for (double v : rho.values()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "initial field is not finite");
  }
  std::vector<double> p(rho.values().begin(), rho.values().end());
  std::vector<double> work(p.size());
  visit(0, p);
  const double theta = config_.scheme == Scheme::ImplicitEuler ? 1.0 : 0.5;
  for (std::size_t k = 0; k < config_.n_steps; ++k) {
    if (frozen_) {
      take_step(*frozen_, p, work);
    } else {
      take_step(make_step(time(k) + theta * dt_), p, work);
    }
    visit(k + 1, p);
  }
}

DensityField Propagator::advance(const DensityField& rho) const {
  DensityField out(grid_);
  march(rho, [&](std::size_t k, std::span<const double> v) {
    if (k == config_.n_steps) std::copy(v.begin(), v.end(), out.values().begin());
  });
  return out;
}

Trajectory Propagator::evolve(const DensityField& rho) const {
  Trajectory traj;
  traj.grid = grid_;
  traj.positivity_unverified = !certified_;
  traj.times.reserve(config_.n_steps + 1);
  traj.fields.reserve(config_.n_steps + 1);
  march(rho, [&](std::size_t k, std::span<const double> v) {
    traj.times.push_back(k == config_.n_steps ? T_ : time(k));
    traj.fields.emplace_back(grid_, std::vector<double>(v.begin(), v.end()));
  });
  return traj;
}

Trajectory evolve(const DiffusionModel& model, const DomainGrid& grid, const SolverConfig& config,
                  const DensityField& rho, double s, double T) {
  return Propagator(model, grid, config, s, T).evolve(rho);
}

std::vector<std::pair<double, double>> mass_curve(const Trajectory& traj) {
  std::vector<std::pair<double, double>> out;
  out.reserve(traj.fields.size());
  for (std::size_t k = 0; k < traj.fields.size(); ++k) {
    out.emplace_back(traj.times[k], mass(traj.fields[k]));
  }
  return out;
}

std::size_t suggest_steps(const DiffusionModel& model, const DomainGrid& grid, double T) {
  const double times[] = {0.0, T};
  const double amax = std::max(max_a_norm(model, grid, times), 1e-300);
  double hmin = grid.h(0);
  if (grid.dim() == 2) hmin = std::min(hmin, grid.h(1));
  const double dt = hmin * hmin / (2.0 * grid.dim() * amax);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(T / dt)));
}

}  // namespace absorb
