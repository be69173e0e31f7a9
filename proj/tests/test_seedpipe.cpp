#include <doctest.h>

#include <cmath>

#include "absorb/errors.hpp"
#include "absorb/seedpipe.hpp"
#include "oracles.hpp"

using namespace absorb;

namespace {

const DiffusionModel kHeat = constant_model(1, {0, 0}, {{{1, 0}, {0, 0}}});

SolverConfig ie(std::size_t steps) {
  SolverConfig c;
  c.n_steps = steps;
  return c;
}

GammaSpec bump_spec(double lo, double hi, double value = 1.0) {
  GammaSpec s;
  s.kind = GammaKind::Bump;
  s.lo = {lo, 0};
  s.hi = {hi, 0};
  s.value = value;
  return s;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("realize_gamma") {
  const DomainGrid g = make_interval(0, 1, 20);

  const TargetProfile eig = realize_gamma(GammaSpec{}, g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(eig.field[k] == doctest::Approx(std::sin(oracle::pi * g.node(k)[0])));
    CHECK(eig.field[k] >= 0.0);
  }

  const TargetProfile b = realize_gamma(bump_spec(0.4, 0.6), g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double x = g.node(k)[0];
    CHECK(b.field[k] == (x > 0.4 && x < 0.6 ? 1.0 : 0.0));
  }
  CHECK(mass(b.field) == doctest::Approx(0.2));

  CHECK(kind_of([&] { realize_gamma(bump_spec(0.4, 0.6, 0.0), g); }) == ErrorKind::GammaZero);
  CHECK(kind_of([&] { realize_gamma(bump_spec(0.4, 0.6, -1.0), g); }) ==
        ErrorKind::GammaNegative);

  GammaSpec csv;
  csv.kind = GammaKind::Csv;
  csv.samples.assign(g.size(), 0.0);
  CHECK(kind_of([&] { realize_gamma(csv, g); }) == ErrorKind::GammaZero);
  csv.samples[3] = -1e-3;
  csv.samples[4] = 1.0;
  CHECK(kind_of([&] { realize_gamma(csv, g); }) == ErrorKind::GammaNegative);
  csv.samples.pop_back();
  CHECK(kind_of([&] { realize_gamma(csv, g); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("tiles partition the domain") {
  const double lo[] = {0, 0}, hi[] = {1, 2};
  const std::size_t n[] = {10, 20};
  const DomainGrid g = make_grid(2, lo, hi, n);
  GammaSpec s;
  s.kind = GammaKind::Tiles;
  s.breaks[0] = {0, 0.3, 1};
  s.breaks[1] = {0, 1, 1.5, 2};
  s.tile_values = {1, 2, 3, 4, 0, 6};
  const TargetProfile t = realize_gamma(s, g);
  std::size_t seen = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.node(k);
    const std::size_t i = x[0] < 0.3 ? 0 : 1;
    const std::size_t j = x[1] < 1 ? 0 : x[1] < 1.5 ? 1 : 2;
    CHECK(t.field[k] == s.tile_values[i + 2 * j]);
    ++seen;
  }
  CHECK(seen == g.size());
  // piecewise constant: integral equals sum of value times tile volume
  CHECK(mass(t.field) == doctest::Approx(0.3 * 1 * 1 + 0.7 * 1 * 2 + 0.3 * 0.5 * 3 + 0.7 * 0.5 * 4 +
                                         0.7 * 0.5 * 6));

  GammaSpec neg = s;
  neg.tile_values[4] = -0.1;
  CHECK(kind_of([&] { realize_gamma(neg, g); }) == ErrorKind::GammaNegative);
  GammaSpec zero = s;
  zero.tile_values.assign(6, 0.0);
  CHECK(kind_of([&] { realize_gamma(zero, g); }) == ErrorKind::GammaZero);
  GammaSpec bad = s;
  bad.breaks[0] = {0, 0.5, 0.4, 1};
  CHECK(kind_of([&] { realize_gamma(bad, g); }) == ErrorKind::InvalidArgument);
  bad = s;
  bad.breaks[1] = {0, 1, 1.9};
  CHECK(kind_of([&] { realize_gamma(bad, g); }) == ErrorKind::InvalidArgument);
  bad = s;
  bad.tile_values.pop_back();
  CHECK(kind_of([&] { realize_gamma(bad, g); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("seed on the eigenmode") {
  const DomainGrid g = make_interval(0, 1, 128);
  const SeedSolution s = run_seed(kHeat, g, ie(256), realize_gamma(GammaSpec{}, g), SeedOptions{});
  const double expected = (1.0 - oracle::eigen_decay(1.0)) * oracle::pi / 2.0;
  CHECK(std::abs(expected - 1.5595) < 1e-4);
  CHECK(std::abs(s.alpha / expected - 1.0) <= 2e-2);
  CHECK(s.residual <= 1e-6);
  CHECK(std::abs(mass(s.rho) - 1.0) <= 1e-12);
  CHECK(min_value(s.rho) >= 0.0);
  CHECK(s.alpha == doctest::Approx(1.0 / mass(s.u0)).epsilon(1e-14));
  CHECK(s.negativity >= -1e-10 * norm_sup(s.u0));
  CHECK(s.report.iterations <= 6);

  // rho ~ (pi/2) sin(pi x)
  const DensityField shape =
      sample(g, [](const Point& x) { return oracle::pi / 2 * std::sin(oracle::pi * x[0]); });
  CHECK(norm_l2(s.rho - shape) / norm_l2(shape) <= 1e-2);

  for (std::size_t k = 1; k < s.mass_curve.size(); ++k)
    CHECK(s.mass_curve[k].second < s.mass_curve[k - 1].second);
  CHECK(s.mass_curve.front().second == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.mass_curve.back().second == doctest::Approx(1.0 - s.alpha * mass(s.gamma.field)));
}

TEST_CASE("seed refuses the non-monotone scheme by default") {
  const DomainGrid g = make_interval(0, 1, 32);
  SolverConfig cn = ie(32);
  cn.scheme = Scheme::CrankNicolson;
  const TargetProfile gamma = realize_gamma(GammaSpec{}, g);
  CHECK(kind_of([&] { run_seed(kHeat, g, cn, gamma, SeedOptions{}); }) ==
        ErrorKind::InvalidArgument);
  SeedOptions opt;
  opt.allow_non_monotone = true;
  const SeedSolution s = run_seed(kHeat, g, cn, gamma, opt);
  CHECK(s.residual <= 1e-6);
}

TEST_CASE("seed on a bump against the dense pipeline") {
  const DomainGrid g = make_interval(0, 1, 128);
  const SolverConfig c = ie(128);
  SeedOptions opt;
  opt.T = 0.5;
  const TargetProfile gamma = realize_gamma(bump_spec(0.4, 0.6), g);
  const SeedSolution s = run_seed(kHeat, g, c, gamma, opt);
  CHECK(s.residual <= 1e-6);
  CHECK(min_value(s.u0) >= 0.0);
  CHECK(s.clamped == 0);

  const OperatorMatrix q = assemble_Q(kHeat, g, c, 0.5);
  const DensityField zeta = solve_resolvent_dense(q, gamma.field);
  const double alpha = 1.0 / mass(zeta);
  CHECK(s.alpha == doctest::Approx(alpha).epsilon(1e-8));
  CHECK(norm_l2(s.rho - alpha * zeta) / norm_l2(s.rho) <= 1e-8);

  Eigen::Map<const Eigen::VectorXd> r(s.rho.data().data(), static_cast<Eigen::Index>(g.size()));
  Eigen::VectorXd rT = q.q * r;
  DensityField rho_T(g);
  for (std::size_t k = 0; k < g.size(); ++k) rho_T[k] = rT(static_cast<Eigen::Index>(k));
  CHECK(decrement_residual(s.rho, rho_T, s.alpha, gamma.field) <= 1e-6);
}

TEST_CASE("seed with drift and a two-dimensional domain") {
  const double lo[] = {0, 0}, hi[] = {1, 1};
  const std::size_t n[] = {16, 16};
  const DomainGrid g = make_grid(2, lo, hi, n);
  const DiffusionModel m =
      linear_drift_model(2, {1.5, 0.5}, {0.3, 0.6}, {{{0.8, 0}, {0, 0.6}}});
  GammaSpec t;
  t.kind = GammaKind::Tiles;
  t.breaks[0] = {0, 0.5, 1};
  t.breaks[1] = {0, 0.5, 1};
  t.tile_values = {0, 1, 2, 0.5};
  SeedOptions opt;
  opt.T = 0.3;
  const SeedSolution s = run_seed(m, g, ie(30), realize_gamma(t, g), opt);
  CHECK(s.residual <= 1e-6);
  CHECK(min_value(s.rho) >= 0.0);
  CHECK(std::abs(mass(s.rho) - 1.0) <= 1e-12);
}

TEST_CASE("scale equivariance") {
  const DomainGrid g = make_interval(0, 1, 64);
  const SolverConfig c = ie(64);
  SeedOptions opt;
  opt.T = 0.5;
  const SeedSolution base = run_seed(kHeat, g, c, realize_gamma(bump_spec(0.2, 0.7), g), opt);
  for (double scale : {0.1, 10.0}) {
    const SeedSolution s =
        run_seed(kHeat, g, c, realize_gamma(bump_spec(0.2, 0.7, scale), g), opt);
    CHECK(norm_l2(s.rho - base.rho) / norm_l2(base.rho) <= 1e-8);
    CHECK(s.alpha * scale == doctest::Approx(base.alpha).epsilon(1e-8));
  }
}

TEST_CASE("verify_seed") {
  const DomainGrid g = make_interval(0, 1, 128);
  const SolverConfig c = ie(256);
  const SeedOptions opt;
  const SeedSolution s = run_seed(kHeat, g, c, realize_gamma(GammaSpec{}, g), opt);
  const VerificationReport v = verify_seed(s, kHeat, g, c, opt);
  CHECK(v.passed);
  CHECK(v.mass_strictly_decreasing);
  CHECK(v.residual_same == doctest::Approx(s.residual).epsilon(1e-6));
  CHECK(v.residual_refined <= v.residual_coarse);
  CHECK(v.mass_curve.size() == 2 * c.n_steps + 1);
  for (std::size_t k = 1; k < v.mass_curve.size(); ++k)
    CHECK(v.mass_curve[k].second < v.mass_curve[k - 1].second);

  SeedSolution bad = s;
  bad.rho[40] += 0.01;
  const VerificationReport w = verify_seed(bad, kHeat, g, c, opt);
  CHECK(w.residual_same > v.residual_same);
  CHECK_FALSE(w.passed);

  SeedSolution tampered = s;
  tampered.alpha *= 1.01;
  CHECK_FALSE(verify_seed(tampered, kHeat, g, c, opt).passed);
}
