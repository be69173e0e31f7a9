#include "absorb/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "absorb/errors.hpp"
#include "absorb/rng.hpp"

namespace absorb {

std::size_t ParticleEnsemble::alive_count() const {
  return static_cast<std::size_t>(std::count(alive.begin(), alive.end(), std::uint8_t{1}));
}

ParticleEnsemble sample_initial(const DensityField& rho, std::size_t n, std::uint64_t seed) {
  const DomainGrid& grid = rho.grid();
  const double vol = grid.cell_volume();
  std::vector<double> cdf(rho.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    if (!(rho[k] >= 0.0) || !std::isfinite(rho[k])) {
      std::ostringstream os;
      os << "rho is negative or not finite at node " << k << " (" << rho[k] << ")";
      throw Error(ErrorKind::NotADensity, os.str());
    }
    acc += rho[k] * vol;
    cdf[k] = acc;
  }
  if (std::abs(acc - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "rho has mass " << acc << ", expected 1";
    throw Error(ErrorKind::NotADensity, os.str());
  }

  ParticleEnsemble ens;
  ens.dim = grid.dim();
  ens.seed = seed;
  ens.positions.resize(n);
  ens.alive.assign(n, 1);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < count; ++p) {
    const ParticleStream stream(seed, static_cast<std::uint64_t>(p), StreamPurpose::Initial);
    const auto [u_cell, u_x] = stream.uniforms(0);
    // scale by the accumulated total so rounding never selects past the end
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u_cell * acc);
    std::size_t k = static_cast<std::size_t>(it - cdf.begin());
    k = std::min(k, cdf.size() - 1);
    const MultiIndex m = grid.unflatten(k);
    Point x{grid.lo(0) + (static_cast<double>(m[0]) + u_x) * grid.h(0), 0.0};
    if (grid.dim() == 2) {
      const double u_y = stream.uniforms(1).first;
      x[1] = grid.lo(1) + (static_cast<double>(m[1]) + u_y) * grid.h(1);
    }
    ens.positions[static_cast<std::size_t>(p)] = x;
  }
  return ens;
}

namespace {

struct StepPlan {
  std::size_t steps = 0;
  double t0 = 0.0;
  double dt = 0.0;
  double T = 0.0;

  double start(std::size_t s) const { return t0 + static_cast<double>(s) * dt; }
  double length(std::size_t s) const { return s + 1 == steps ? T - start(s) : dt; }
};

StepPlan plan(double t0, double T, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  StepPlan p{0, t0, dt, T};
  if (T <= t0) return p;
  if (dt > T - t0) throw Error(ErrorKind::InvalidArgument, "dt must not exceed the horizon");
  const double ratio = (T - t0) / dt;
  p.steps = static_cast<std::size_t>(std::ceil(ratio * (1.0 - 1e-12)));
  return p;
}

void move_particle(const DiffusionModel& model, const DomainGrid& grid, const StepPlan& plan,
                   const ParticleEnsemble& ens, std::size_t p, Point& x, std::uint8_t& alive) {
  if (!alive) return;
  const int dim = ens.dim;
  const ParticleStream stream(ens.seed, p, StreamPurpose::Dynamics);
  std::uint64_t cached_block = std::numeric_limits<std::uint64_t>::max();
  std::pair<double, double> cached{0.0, 0.0};
  auto normal = [&](std::uint64_t index) {
    const std::uint64_t block = index / 2;
    if (block != cached_block) {
      cached = stream.normals(block);
      cached_block = block;
    }
    return index % 2 == 0 ? cached.first : cached.second;
  };
  for (std::size_t s = 0; s < plan.steps; ++s) {
    const double t = plan.start(s);
    const double h = plan.length(s);
    const double sq = std::sqrt(h);
    const Vec2 f = model.drift(x, t);
    const Mat2 b = model.beta(x, t);
    const std::uint64_t base = ens.normals_used + static_cast<std::uint64_t>(s) * dim;
    if (dim == 1) {
      x[0] += f[0] * h + b[0][0] * sq * normal(base);
    } else {
      const double z0 = normal(base), z1 = normal(base + 1);
      x[0] += f[0] * h + sq * (b[0][0] * z0 + b[0][1] * z1);
      x[1] += f[1] * h + sq * (b[1][0] * z0 + b[1][1] * z1);
    }
    if (!grid.contains(x)) {
      alive = 0;
      return;
    }
  }
}

ParticleEnsemble run(const DiffusionModel& model, const DomainGrid& grid, ParticleEnsemble ens,
                     double T, double dt, bool parallel) {
  if (model.dim() != grid.dim() || ens.dim != grid.dim()) {
    throw Error(ErrorKind::InvalidArgument, "model, grid and ensemble dimensions differ");
  }
  const StepPlan sp = plan(ens.time, T, dt);
  const auto count = static_cast<std::ptrdiff_t>(ens.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 256)
    for (std::ptrdiff_t p = 0; p < count; ++p) {
      const auto i = static_cast<std::size_t>(p);
      move_particle(model, grid, sp, ens, i, ens.positions[i], ens.alive[i]);
    }
  } else {
    for (std::size_t i = 0; i < ens.size(); ++i) {
      move_particle(model, grid, sp, ens, i, ens.positions[i], ens.alive[i]);
    }
  }
  ens.normals_used += static_cast<std::uint64_t>(sp.steps) * static_cast<std::uint64_t>(ens.dim);
  if (sp.steps > 0) ens.time = T;
  return ens;
}

}  // namespace

ParticleEnsemble simulate(const DiffusionModel& model, const DomainGrid& grid,
                          ParticleEnsemble ensemble, double T, double dt) {
  return run(model, grid, std::move(ensemble), T, dt, true);
}

ParticleEnsemble simulate_serial(const DiffusionModel& model, const DomainGrid& grid,
                                 ParticleEnsemble ensemble, double T, double dt) {
  return run(model, grid, std::move(ensemble), T, dt, false);
}

double default_dt(const DiffusionModel& model, const DomainGrid& grid, double T) {
  const double times[] = {0.0, T};
  const double amax = std::max(max_a_norm(model, grid, times), 1e-300);
  double hmin = grid.h(0);
  if (grid.dim() == 2) hmin = std::min(hmin, grid.h(1));
  return std::min(1e-3 * T, hmin * hmin / (4.0 * amax));
}

MCEstimate estimate_density(const ParticleEnsemble& ens, const DomainGrid& grid) {
  MCEstimate est;
  est.n_particles = ens.size();
  est.counts.assign(grid.size(), 0);
  std::size_t alive = 0;
  for (std::size_t p = 0; p < ens.size(); ++p) {
    if (!ens.alive[p]) continue;
    ++alive;
    ++est.counts[grid.locate(ens.positions[p])];
  }
  const double n = static_cast<double>(std::max<std::size_t>(est.n_particles, 1));
  const double vol = grid.cell_volume();
  est.histogram = DensityField(grid);
  est.stderr_field = DensityField(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double p = static_cast<double>(est.counts[k]) / n;
    est.histogram[k] = p / vol;
    est.stderr_field[k] = std::sqrt(p * (1.0 - p) / n) / vol;
  }
  est.survival = est.n_particles ? static_cast<double>(alive) / n : 0.0;
  return est;
}

DensityField coarsen(const DensityField& fine, const DomainGrid& coarse) {
  const DomainGrid& g = fine.grid();
  std::array<std::size_t, 2> r{1, 1};
  for (int a = 0; a < g.dim(); ++a) {
    if (coarse.dim() != g.dim() || g.n_cells(a) % coarse.n_cells(a) != 0) {
      throw Error(ErrorKind::ShapeMismatch, "coarse grid must evenly divide the fine grid");
    }
    r[a] = g.n_cells(a) / coarse.n_cells(a);
  }
  DensityField out(coarse);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const MultiIndex m = g.unflatten(k);
    out[coarse.flatten({m[0] / r[0], m[1] / r[1]})] += fine[k];
  }
  out *= 1.0 / static_cast<double>(r[0] * r[1]);
  return out;
}

ConsistencyReport compare_to_reference(const MCEstimate& mc, const DensityField& reference,
                                       double bound) {
  const DomainGrid& grid = mc.histogram.grid();
  if (!reference.grid().same_shape(grid)) {
    throw Error(ErrorKind::ShapeMismatch, "reference density is on a different grid");
  }
  ConsistencyReport rep;
  rep.bound = bound;
  rep.z.resize(grid.size());
  const double vol = grid.cell_volume();
  const double n = static_cast<double>(mc.n_particles);
  std::size_t within = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double prob = std::clamp(reference[k] * vol, 0.0, 1.0);
    const double se = std::sqrt(prob * (1.0 - prob) / n) / vol;
    const double diff = mc.histogram[k] - reference[k];
    double z = 0.0;
    if (se > 0.0) {
      z = diff / se;
    } else if (mc.counts[k] > 0) {
      z = std::numeric_limits<double>::infinity();
    }
    rep.z[k] = z;
    if (std::abs(z) <= bound) ++within;
  }
  rep.fraction_within = static_cast<double>(within) / static_cast<double>(grid.size());
  rep.mc_survival = mc.survival;
  rep.pde_survival = mass(reference);
  return rep;
}

}  // namespace absorb
