// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "absorb/cli.hpp"
#include "absorb/io.hpp"
#include "absorb/montecarlo.hpp"
#include "absorb/seedpipe.hpp"

using namespace absorb;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kPi = std::numbers::pi;
const DiffusionModel kHeat = constant_model(1, {0, 0}, {{{1, 0}, {0, 0}}});

double decay(double T) { return std::exp(-kPi * kPi / 2 * T); }

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SolverConfig solver(std::size_t steps, Scheme s = Scheme::ImplicitEuler) {
  SolverConfig c;
  c.n_steps = steps;
  c.scheme = s;
  return c;
}

DensityField sine(const DomainGrid& g) {
  return sample(g, [](const Point& x) { return std::sin(kPi * x[0]); });
}

GammaSpec bump() {
  GammaSpec s;
  s.kind = GammaKind::Bump;
  s.lo = {0.4, 0};
  s.hi = {0.6, 0};
  return s;
}

struct Outcome {
  bool pass;
  std::string detail;
};

// 1. eigenmode decay
Outcome eigenmode_decay() {
  const auto t0 = Clock::now();
  const DomainGrid g = make_interval(0, 1, 256);
  const Propagator p(kHeat, g, solver(512, Scheme::CrankNicolson), 0.0, 1.0);
  const DensityField out = p.advance(sine(g));
  const double secs = seconds_since(t0);
  const DensityField expected = decay(1.0) * sine(g);
  const double err = norm_l2(out - expected) / norm_l2(expected);
  std::ostringstream os;
  os << "rel L2 error " << err << " (<= 1e-2), " << secs << " s (< 10 s)";
  return {err <= 1e-2 && secs < 10.0, os.str()};
}

// 2. spectral contraction
Outcome spectral_contraction() {
  const DomainGrid g = make_interval(0, 1, 256);
  bool ok = true;
  std::ostringstream os;
  for (double T : {1.0, 0.1}) {
    const SolutionOperator q(kHeat, g, solver(512, Scheme::CrankNicolson), T);
    const SpectralEstimate est = spectral_radius(q.as_map(), g.size(), 1e-10);
    const double rel = std::abs(est.radius / decay(T) - 1.0);
    ok = ok && est.converged && rel <= 2e-2;
    os << "T=" << T << ": " << est.radius << " vs " << decay(T) << " (rel " << rel << ") ";
  }
  return {ok, os.str()};
}

// 3. resolvent correctness
Outcome resolvent_correctness() {
  bool ok = true;
  std::ostringstream os;
  for (std::size_t n : {128u, 256u}) {
    const DomainGrid g = make_interval(0, 1, n);
    const SolverConfig c = solver(128);
    const DensityField gamma = realize_gamma(bump(), g).field;
    const ResolventReport r = solve_resolvent(kHeat, g, c, 0.5, gamma, 1e-10, 500);
    const DensityField dense = solve_resolvent_dense(assemble_Q(kHeat, g, c, 0.5), gamma);
    const double diff = norm_l2(r.zeta - dense) / norm_l2(dense);
    ok = ok && r.residual_norm <= 1e-8 && diff <= 1e-7;
    os << "N=" << n << ": residual " << r.residual_norm << ", vs dense " << diff << " ";
  }
  return {ok, os.str()};
}

// 4. end-to-end seed
Outcome seed_end_to_end() {
  const DomainGrid g = make_interval(0, 1, 128);
  const SeedSolution s =
      run_seed(kHeat, g, solver(256), realize_gamma(GammaSpec{}, g), SeedOptions{});
  const double expected = (1.0 - decay(1.0)) * kPi / 2;
  const double rel = std::abs(s.alpha / expected - 1.0);
  const double mass_err = std::abs(mass(s.rho) - 1.0);
  const double min_rho = min_value(s.rho);
  std::ostringstream os;
  os << "alpha " << s.alpha << " vs " << expected << " (rel " << rel << "), residual "
     << s.residual << ", |mass-1| " << mass_err << ", min rho " << min_rho;
  return {rel <= 2e-2 && s.residual <= 1e-6 && mass_err <= 1e-12 && min_rho >= 0.0, os.str()};
}

// 5. positivity
Outcome positivity() {
  std::mt19937_64 rng(20240501);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const DiffusionModel models[] = {
      kHeat, constant_model(1, {3.0, 0}, {{{0.4, 0}, {0, 0}}}),
      linear_drift_model(1, {6.0, 0}, {0.3, 0}, {{{0.7, 0}, {0, 0}}}),
      custom_model(1,
                   [](const Point& x, double t) { return Vec2{std::sin(6 * x[0]) * (1 + t), 0}; },
                   [](const Point& x, double) {
                     return Mat2{{{0.5 + 0.4 * x[0], 0}, {0, 0}}};
                   },
                   true)};
  std::size_t negatives = 0, fields = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const DomainGrid g = make_interval(0, 1, 32 + 8 * (trial % 9));
    const double sparsity = u(rng);
    const DensityField rho =
        sample(g, [&](const Point&) { return u(rng) < sparsity ? 0.0 : u(rng) * 10; });
    const Trajectory tr =
        evolve(models[trial % 4], g, solver(20 + trial % 30), rho, 0.0, 0.01 + 0.5 * u(rng));
    for (const auto& f : tr.fields) {
      ++fields;
      for (double v : f.data()) negatives += v < 0.0;
    }
  }
  double min_entry = 1.0, cmin = 1.0, cmax = 0.0;
  for (const auto& m : models) {
    const DomainGrid g = make_interval(0, 1, 256);
    const OperatorMatrix q = assemble_Q(m, g, solver(64), 0.2);
    min_entry = std::min(min_entry, q.min_entry());
    for (std::size_t j = 0; j < q.size(); ++j) {
      cmin = std::min(cmin, q.column_mass(j));
      cmax = std::max(cmax, q.column_mass(j));
    }
  }
  std::ostringstream os;
  os << negatives << " negative values in " << fields << " fields; Q min entry " << min_entry
     << ", column mass in [" << cmin << ", " << cmax << "]";
  return {negatives == 0 && min_entry >= 0.0 && cmin > 0.0 && cmax < 1.0, os.str()};
}

// 6. mass loss of positive and negative parts
Outcome mass_loss() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t held = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const DomainGrid g = make_interval(0, 1, 64);
    const DiffusionModel m = constant_model(1, {4 * nd(rng), 0}, {{{0.3 + u(rng), 0}, {0, 0}}});
    const SolutionOperator q(m, g, solver(32), 0.02 + u(rng));
    DensityField u0 = sample(g, [&](const Point&) { return nd(rng); });
    if (norm_l1(u0) == 0.0) u0[0] = 1.0;
    DensityField plus(g), minus(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      plus[k] = std::max(u0[k], 0.0);
      minus[k] = std::max(-u0[k], 0.0);
    }
    const double ratio = (norm_l1(q.apply(plus)) + norm_l1(q.apply(minus))) / norm_l1(u0);
    held += ratio < 1.0;
    worst = std::max(worst, ratio);
  }
  std::ostringstream os;
  os << held << "/100 strict, worst ratio " << worst;
  return {held == 100, os.str()};
}

// 7. Monte Carlo consistency
Outcome monte_carlo() {
  const auto t0 = Clock::now();
  const std::size_t n = 100000;
  const DomainGrid g = make_interval(0, 1, 256);
  DensityField rho = (kPi / 2) * sine(g);
  rho *= 1.0 / mass(rho);
  const ParticleEnsemble e = simulate(kHeat, g, sample_initial(rho, n, 1), 0.5, 1e-4);
  const double survival = estimate_density(e, g).survival;
  const double expected = std::exp(-kPi * kPi / 4);
  const double sd = std::sqrt(expected * (1 - expected) / n);
  const bool survival_ok = std::abs(survival - expected) <= 3 * sd + 0.01;

  const DomainGrid sg = make_interval(0, 1, 128);
  SeedOptions opt;
  opt.T = 0.5;
  const SeedSolution s = run_seed(kHeat, sg, solver(128), realize_gamma(bump(), sg), opt);
  const ParticleEnsemble b = simulate(kHeat, sg, sample_initial(s.rho, n, 2), 0.5, 1e-4);
  const DomainGrid bins = make_interval(0, 1, 32);
  const ConsistencyReport r =
      compare_to_reference(estimate_density(b, bins), coarsen(s.alpha * s.uT, bins));
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << "survival " << survival << " vs " << expected << " (allow " << 3 * sd + 0.01
     << "), z within 4: " << 100 * r.fraction_within << "%, " << secs << " s (< 120 s)";
  return {survival_ok && r.fraction_within >= 0.95 && secs < 120.0, os.str()};
}

// 8. scale equivariance
Outcome scale_equivariance() {
  const DomainGrid g = make_interval(0, 1, 128);
  SeedOptions opt;
  opt.T = 0.5;
  std::vector<SeedSolution> runs;
  for (double c : {0.1, 1.0, 10.0}) {
    GammaSpec s = bump();
    s.value = c;
    runs.push_back(run_seed(kHeat, g, solver(128), realize_gamma(s, g), opt));
  }
  const SeedSolution& base = runs[1];
  double rho_dev = 0.0, decrement_dev = 0.0;
  std::ostringstream os;
  os << "alpha for c=0.1,1,10:";
  const double scale[] = {0.1, 1.0, 10.0};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    rho_dev = std::max(rho_dev, norm_l2(runs[i].rho - base.rho) / norm_l2(base.rho));
    decrement_dev =
        std::max(decrement_dev, std::abs(runs[i].alpha * scale[i] / base.alpha - 1.0));
    os << " " << runs[i].alpha;
  }
  os << "; max rel rho deviation " << rho_dev << ", max rel deviation of alpha*c "
     << decrement_dev;
  return {rho_dev <= 1e-8 && decrement_dev <= 1e-8, os.str()};
}

// 9. determinism of the mc command across thread counts
Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("absorb_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const DomainGrid g = make_interval(0, 1, 64);
  DensityField rho = sine(g);
  rho *= 1.0 / mass(rho);
  io::write_field_csv(dir / "rho.csv", rho);
  const nlohmann::json cfg = {
      {"domain", {{"dim", 1}, {"lo", {0.0}}, {"hi", {1.0}}, {"n_cells", {64}}}},
      {"model", {{"family", "constant"}, {"drift", {0.0}}, {"beta", {{1.0}}}}},
      {"time", {{"T", 0.1}, {"n_steps", 32}}},
      {"mc", {{"n_particles", 20000}, {"seed", 20240917}, {"dt", 1e-4}, {"bins", 16}}}};
  io::write_text(dir / "run.json", cfg.dump(2));

  const int threads[] = {1, 4, 1};
  std::vector<std::string> reports;
  bool ran = true;
  std::string failure;
  for (std::size_t i = 0; i < 3; ++i) {
    omp_set_num_threads(threads[i]);
    std::ostringstream out, err;
    const fs::path o = dir / ("run" + std::to_string(i));
    const int code = cli::run({"mc", "-c", (dir / "run.json").string(), "--rho",
                               (dir / "rho.csv").string(), "-o", o.string()},
                              out, err);
    if (code != 0) {
      ran = false;
      failure = " (exit " + std::to_string(code) + ": " + err.str() + ")";
    }
    reports.push_back(io::read_text(o / "mc.json") + io::read_text(o / "mc.csv") +
                      io::read_text(o / "zscores.csv"));
  }
  omp_set_num_threads(omp_get_num_procs());
  fs::remove_all(dir);
  const bool same = reports[0] == reports[1] && reports[1] == reports[2];
  return {ran && same, std::string("threads 1/4/1, reports ") + (same ? "byte-identical" : "differ") + failure};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"eigenmode decay", eigenmode_decay},
      {"spectral contraction", spectral_contraction},
      {"resolvent correctness", resolvent_correctness},
      {"seed end-to-end", seed_end_to_end},
      {"positivity", positivity},
      {"mass loss", mass_loss},
      {"Monte Carlo consistency", monte_carlo},
      {"scale equivariance", scale_equivariance},
      {"determinism", determinism}};
  int failed = 0, index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
