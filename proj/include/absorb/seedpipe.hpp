#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "absorb/fredholm.hpp"

namespace absorb {

enum class GammaKind { Eigenmode, Bump, Tiles, Csv };
const char* to_string(GammaKind kind);

// Parameters of a decrement profile gamma. Only the members relevant to the
// kind are read.
struct GammaSpec {
  GammaKind kind = GammaKind::Eigenmode;
  // bump: indicator of the open sub-box (lo, hi) scaled by value
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};
  double value = 1.0;
  // tiles: per-axis breakpoints from the domain's lo to hi; one value per
  // tile, x fastest
  std::array<std::vector<double>, 2> breaks;
  std::vector<double> tile_values;
  // csv: values already read onto the grid
  std::vector<double> samples;
};

struct TargetProfile {
  GammaSpec spec;
  DensityField field;
};

// Samples the profile at cell centres. Throws Error(GammaNegative) if any
// value (or tile value) is negative and Error(GammaZero) if the field is
// identically zero; gamma >= 0, gamma != 0 is required for a seed to exist.
TargetProfile realize_gamma(const GammaSpec& spec, const DomainGrid& grid);

struct SeedOptions {
  double T = 1.0;
  double resolvent_tol = 1e-10;
  std::size_t resolvent_max_iter = 500;
  double residual_tol = 1e-6;
  // Negative values of u0 above -eps_neg_rel * sup(u0) are clamped to 0.
  double eps_neg_rel = 1e-10;
  // Crank-Nicolson is refused unless set.
  bool allow_non_monotone = false;
};

struct SeedSolution {
  TargetProfile gamma;
  DensityField zeta;
  DensityField u0;
  DensityField uT;
  double alpha = 0.0;
  DensityField rho;
  double residual = 0.0;    // sup|p(0) - p(T) - alpha gamma| / sup gamma
  double negativity = 0.0;  // most negative value of u0 before clamping (<= 0)
  std::size_t clamped = 0;
  ResolventReport report;
  std::vector<std::pair<double, double>> mass_curve;  // of p = evolve(rho)
};

// Builds the initial density rho and alpha > 0 with
//   p(., 0) = p(., T) + alpha gamma
// for the absorbed process: zeta = (I - Q)^{-1} gamma, u0 = zeta,
// alpha = 1 / mass(u0), rho = alpha u0, then re-evolves rho from scratch to
// measure the residual.
// Throws Error(NegativityViolation), Error(ResidualTooLarge), and propagates
// resolvent and solver failures.
SeedSolution run_seed(const DiffusionModel& model, const DomainGrid& grid,
                      const SolverConfig& config, const TargetProfile& gamma,
                      const SeedOptions& options);

struct VerificationReport {
  double residual_same = 0.0;     // re-evolution at the original step count
  double residual_refined = 0.0;  // twice the steps
  double residual_coarse = 0.0;   // half the steps (at least one)
  std::vector<std::pair<double, double>> mass_curve;  // refined run
  bool mass_strictly_decreasing = false;
  DensityField decrement;  // p(0) - p(T), refined run
  bool passed = false;
};

// Independent re-evolution of rho. Report-only; passed means residual_same is
// within the residual tolerance and the mass curve strictly decreases.
VerificationReport verify_seed(const SeedSolution& solution, const DiffusionModel& model,
                               const DomainGrid& grid, const SolverConfig& config,
                               const SeedOptions& options);

// sup|rho - Q rho - alpha gamma| / sup gamma for an explicit operator.
double decrement_residual(const DensityField& rho, const DensityField& rho_T, double alpha,
                          const DensityField& gamma);

}  // namespace absorb
