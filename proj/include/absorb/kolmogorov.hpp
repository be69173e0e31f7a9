#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "absorb/grid.hpp"
#include "absorb/linalg.hpp"
#include "absorb/model.hpp"
#include "absorb/stencil.hpp"

namespace absorb {

enum class Scheme { ImplicitEuler, CrankNicolson };
enum class LinearSolver { Direct, BiCGStab };

const char* to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

struct SolverConfig {
  std::size_t n_steps = 256;
  Scheme scheme = Scheme::ImplicitEuler;
  LinearSolver linear_solver = LinearSolver::Direct;
  double linear_solver_tol = 1e-13;
  std::size_t linear_solver_max_iter = 2000;
};

void validate(const SolverConfig& config);

struct Trajectory {
  DomainGrid grid;
  std::vector<double> times;
  std::vector<DensityField> fields;
  // Set when the step map is not certified monotone (Crank-Nicolson, or
  // mixed second derivatives in 2-D).
  bool positivity_unverified = false;
};

// Time-stepping for dp/dt = A p on [s, T] with zero Dirichlet data.
// Implicit Euler evaluates coefficients at t_{k+1}, Crank-Nicolson at
// t_{k+1/2}. For time-independent models the step matrix is factorised once.
// All methods are const and safe to call concurrently.
class Propagator {
 public:
  Propagator(const DiffusionModel& model, const DomainGrid& grid, const SolverConfig& config,
             double s, double T);

  const DomainGrid& grid() const { return grid_; }
  double dt() const { return dt_; }
  double time(std::size_t k) const { return s_ + static_cast<double>(k) * dt_; }
  std::size_t n_steps() const { return config_.n_steps; }
  bool positivity_certified() const { return certified_; }

  // Final field only.
  DensityField advance(const DensityField& rho) const;

  // Calls visit(k, values) for k = 0..n_steps.
  void march(const DensityField& rho,
             const std::function<void(std::size_t, std::span<const double>)>& visit) const;

  Trajectory evolve(const DensityField& rho) const;

 private:
  struct Step {
    StencilOperator op;
    std::optional<BandedLU> lu;
  };
  Step make_step(double t_eval) const;
  void take_step(const Step& step, std::vector<double>& p, std::vector<double>& work) const;

  std::shared_ptr<const DiffusionModel> model_;
  DomainGrid grid_;
  SolverConfig config_;
  double s_, T_, dt_;
  bool certified_ = false;
  std::optional<Step> frozen_;
};

// Throws Error(LinearSolveFailure) when an inner solve does not converge.
Trajectory evolve(const DiffusionModel& model, const DomainGrid& grid, const SolverConfig& config,
                  const DensityField& rho, double s, double T);

std::vector<std::pair<double, double>> mass_curve(const Trajectory& traj);

// Step count keeping dt <= h^2 / (2 dim max|a|), for Crank-Nicolson accuracy.
std::size_t suggest_steps(const DiffusionModel& model, const DomainGrid& grid, double T);

}  // namespace absorb
