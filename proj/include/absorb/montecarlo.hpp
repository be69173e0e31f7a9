#pragma once

#include <cstdint>
#include <vector>

#include "absorb/grid.hpp"
#include "absorb/model.hpp"

namespace absorb {

// Particles of the absorbed SDE. Each particle draws from its own
// counter-based stream keyed by (seed, index), so a simulation is
// reproducible regardless of thread count or scheduling.
struct ParticleEnsemble {
  int dim = 1;
  std::uint64_t seed = 0;
  double time = 0.0;
  std::uint64_t normals_used = 0;  // per particle, shared across the ensemble
  std::vector<Point> positions;
  std::vector<std::uint8_t> alive;

  std::size_t size() const { return positions.size(); }
  std::size_t alive_count() const;
};

// Cell chosen with probability rho_k * cellVolume, then a uniform point in
// the cell. Throws Error(NotADensity) unless rho >= 0 and mass(rho) = 1
// within 1e-9.
ParticleEnsemble sample_initial(const DensityField& rho, std::size_t n, std::uint64_t seed);

// Euler-Maruyama x <- x + f dt + beta sqrt(dt) xi from ensemble.time to T,
// the last step shortened to land on T exactly. A particle found outside the
// open box after a step is absorbed there (no bridge correction).
ParticleEnsemble simulate(const DiffusionModel& model, const DomainGrid& grid,
                          ParticleEnsemble ensemble, double T, double dt);
// Single-threaded reference; bitwise identical to simulate().
ParticleEnsemble simulate_serial(const DiffusionModel& model, const DomainGrid& grid,
                                 ParticleEnsemble ensemble, double T, double dt);

// min(1e-3 T, h^2 / (4 max a)).
double default_dt(const DiffusionModel& model, const DomainGrid& grid, double T);

struct MCEstimate {
  DensityField histogram;  // counts / (n cellVolume)
  DensityField stderr_field;
  std::vector<std::uint64_t> counts;
  std::size_t n_particles = 0;
  double survival = 0.0;
};

MCEstimate estimate_density(const ParticleEnsemble& ensemble, const DomainGrid& grid);

// Sums cells of a fine field onto a grid whose cell counts divide the fine
// ones; the result keeps mass.
DensityField coarsen(const DensityField& fine, const DomainGrid& coarse);

struct ConsistencyReport {
  std::vector<double> z;  // per cell, (mc - pde) / binomial stderr under the pde
  double fraction_within = 0.0;
  double bound = 4.0;
  double mc_survival = 0.0;
  double pde_survival = 0.0;
};

// Per-cell z-scores of a histogram against a reference density on the same
// grid. A cell where the reference and the histogram are both zero scores 0.
ConsistencyReport compare_to_reference(const MCEstimate& mc, const DensityField& reference,
                                       double bound = 4.0);

}  // namespace absorb
