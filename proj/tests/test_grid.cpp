#include <doctest.h>

#include <cmath>
#include <random>

#include "absorb/errors.hpp"
#include "absorb/grid.hpp"
#include "oracles.hpp"

using namespace absorb;

TEST_CASE("make_grid on the unit interval") {
  const DomainGrid g = make_interval(0.0, 1.0, 4);
  CHECK(g.dim() == 1);
  CHECK(g.size() == 4);
  CHECK(g.h(0) == 0.25);
  CHECK(g.node(0)[0] == 0.125);
  CHECK(g.node(1)[0] == 0.375);
  CHECK(g.node(2)[0] == 0.625);
  CHECK(g.node(3)[0] == 0.875);
}

TEST_CASE("make_grid on a rectangle") {
  const double lo[] = {0.0, 0.0}, hi[] = {1.0, 2.0};
  const std::size_t n[] = {4, 8};
  const DomainGrid g = make_grid(2, lo, hi, n);
  CHECK(g.h(0) == 0.25);
  CHECK(g.h(1) == 0.25);
  CHECK(g.size() == 32);
  CHECK(g.cell_volume() == 0.0625);
}

TEST_CASE("make_grid rejects bad input") {
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  CHECK(kind_of([] { make_interval(0.0, 1.0, 2); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { make_interval(1.0, 1.0, 8); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { make_interval(1.0, 0.0, 8); }) == ErrorKind::InvalidArgument);
  const double lo[] = {0.0, 0.0, 0.0}, hi[] = {1.0, 1.0, 1.0};
  const std::size_t n[] = {4, 4, 4};
  CHECK(kind_of([&] { make_grid(3, lo, hi, n); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("flat index round trip") {
  const double lo[] = {-1.0, 0.5}, hi[] = {2.0, 1.5};
  const std::size_t n[] = {7, 5};
  const DomainGrid g = make_grid(2, lo, hi, n);
  for (std::size_t j = 0; j < 5; ++j) {
    for (std::size_t i = 0; i < 7; ++i) {
      const MultiIndex m{i, j};
      CHECK(g.unflatten(g.flatten(m)) == m);
    }
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(g.flatten(g.unflatten(k)) == k);
    CHECK(g.locate(g.node(k)) == k);
  }
}

TEST_CASE("mass by midpoint quadrature") {
  const DomainGrid g = make_interval(0.0, 1.0, 256);
  CHECK(mass(DensityField(g)) == 0.0);
  for (std::size_t n : {4, 7, 64, 1000}) {
    const DomainGrid gn = make_interval(0.0, 1.0, n);
    CHECK(mass(sample(gn, [](const Point&) { return 1.0; })) == doctest::Approx(1.0).epsilon(1e-14));
  }
  const DensityField s = sample(g, [](const Point& x) { return std::sin(oracle::pi * x[0]); });
  CHECK(std::abs(mass(s) - 2.0 / oracle::pi) < 1e-4);
}

TEST_CASE("quadrature is exact for cellwise constants") {
  const double lo[] = {0.0, -1.0}, hi[] = {3.0, 1.0};
  const std::size_t n[] = {6, 4};
  const DomainGrid g = make_grid(2, lo, hi, n);
  const DensityField f = sample(g, [](const Point&) { return 2.5; });
  CHECK(mass(f) == doctest::Approx(2.5 * 6.0).epsilon(1e-15));
}

TEST_CASE("L1 <= sqrt(volume) L2 on random fields") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 200; ++trial) {
    const double lo[] = {0.0, 0.0}, hi[] = {1.0 + trial % 3, 2.0};
    const std::size_t n[] = {4 + trial % 5, 4 + trial % 7};
    const DomainGrid g = make_grid(2, lo, hi, n);
    const DensityField f = sample(g, [&](const Point&) { return nd(rng); });
    CHECK(norm_l1(f) <= std::sqrt(g.volume()) * norm_l2(f) * (1.0 + 1e-12));
  }
}

TEST_CASE("DensityField rejects a wrong value count") {
  const DomainGrid g = make_interval(0.0, 1.0, 8);
  CHECK_THROWS_AS(DensityField(g, std::vector<double>(7)), Error);
}
