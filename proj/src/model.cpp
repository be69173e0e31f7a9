#include "absorb/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "absorb/errors.hpp"

namespace absorb {

const char* to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::Constant: return "constant";
    case ModelFamily::LinearDrift: return "linear-drift";
    case ModelFamily::Tabulated: return "tabulated";
    case ModelFamily::Custom: return "custom";
  }
  return "unknown";
}

DiffusionModel::DiffusionModel(int dim, ModelFamily family, DriftFn drift, BetaFn beta,
                               bool time_dependent)
    : dim_(dim), family_(family), drift_(std::move(drift)), beta_(std::move(beta)),
      time_dependent_(time_dependent) {
  if (dim != 1 && dim != 2) throw Error(ErrorKind::InvalidArgument, "model dimension must be 1 or 2");
}

Vec2 DiffusionModel::drift(const Point& x, double t) const {
  Vec2 f = drift_(x, t);
  if (dim_ == 1) f[1] = 0.0;
  return f;
}

Mat2 DiffusionModel::beta(const Point& x, double t) const {
  Mat2 b = beta_(x, t);
  if (dim_ == 1) {
    b[0][1] = b[1][0] = b[1][1] = 0.0;
  }
  return b;
}

DiffusionModel constant_model(int dim, Vec2 drift, Mat2 beta) {
  return DiffusionModel(
      dim, ModelFamily::Constant, [drift](const Point&, double) { return drift; },
      [beta](const Point&, double) { return beta; }, false);
}

DiffusionModel linear_drift_model(int dim, Vec2 rate, Vec2 centre, Mat2 beta) {
  return DiffusionModel(
      dim, ModelFamily::LinearDrift,
      [rate, centre](const Point& x, double) {
        return Vec2{-rate[0] * (x[0] - centre[0]), -rate[1] * (x[1] - centre[1])};
      },
      [beta](const Point&, double) { return beta; }, false);
}

DiffusionModel custom_model(int dim, DiffusionModel::DriftFn drift, DiffusionModel::BetaFn beta,
                            bool time_dependent) {
  return DiffusionModel(dim, ModelFamily::Custom, std::move(drift), std::move(beta),
                        time_dependent);
}

namespace {

// Component-wise linear blend used by the table interpolation.
Vec2 lerp_value(const Vec2& a, const Vec2& b, double w) {
  return {a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])};
}

Mat2 lerp_value(const Mat2& a, const Mat2& b, double w) {
  Mat2 out{};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) out[r][c] = a[r][c] + w * (b[r][c] - a[r][c]);
  return out;
}

// Bracketing node index and weight along one axis of a cell-centred grid.
std::pair<std::size_t, double> bracket(const DomainGrid& g, int axis, double x) {
  const std::size_t n = g.n_cells(axis);
  const double r = (x - g.lo(axis)) / g.h(axis) - 0.5;
  if (r <= 0.0) return {0, 0.0};
  if (r >= static_cast<double>(n - 1)) return {n - 2, 1.0};
  const auto i = static_cast<std::size_t>(std::floor(r));
  return {i, r - static_cast<double>(i)};
}

template <class T, class Get>
T interpolate(const DomainGrid& g, const Point& x, Get&& get) {
  const auto [i, wx] = bracket(g, 0, x[0]);
  if (g.dim() == 1) {
    return lerp_value(get(i), get(i + 1), wx);
  }
  const auto [j, wy] = bracket(g, 1, x[1]);
  const T lo = lerp_value(get(g.flatten({i, j})), get(g.flatten({i + 1, j})), wx);
  const T hi = lerp_value(get(g.flatten({i, j + 1})), get(g.flatten({i + 1, j + 1})), wx);
  return lerp_value(lo, hi, wy);
}

}  // namespace

DiffusionModel tabulated_model(std::vector<CoefficientTable> tables) {
  if (tables.empty()) throw Error(ErrorKind::InvalidArgument, "tabulated model needs at least one table");
  const DomainGrid& g0 = tables.front().grid;
  for (const auto& t : tables) {
    if (!t.grid.same_shape(g0)) {
      throw Error(ErrorKind::InvalidArgument, "all coefficient tables must share one grid");
    }
    if (t.drift.size() != g0.size() || t.beta.size() != g0.size()) {
      throw Error(ErrorKind::ShapeMismatch, "coefficient table size does not match its grid");
    }
  }
  std::sort(tables.begin(), tables.end(),
            [](const auto& a, const auto& b) { return a.time < b.time; });
  auto shared = std::make_shared<const std::vector<CoefficientTable>>(std::move(tables));

  // Locates the pair of time samples around t.
  auto in_time = [shared](double t) -> std::pair<std::size_t, double> {
    const auto& ts = *shared;
    if (ts.size() == 1 || t <= ts.front().time) return {0, 0.0};
    if (t >= ts.back().time) return {ts.size() - 1, 0.0};
    std::size_t k = 0;
    while (ts[k + 1].time < t) ++k;
    return {k, (t - ts[k].time) / (ts[k + 1].time - ts[k].time)};
  };

  auto drift = [shared, in_time](const Point& x, double t) {
    const auto [k, w] = in_time(t);
    const auto& ts = *shared;
    auto at = [&](std::size_t s) {
      return interpolate<Vec2>(ts[s].grid, x, [&](std::size_t n) { return ts[s].drift[n]; });
    };
    return w == 0.0 ? at(k) : lerp_value(at(k), at(k + 1), w);
  };
  auto beta = [shared, in_time](const Point& x, double t) {
    const auto [k, w] = in_time(t);
    const auto& ts = *shared;
    auto at = [&](std::size_t s) {
      return interpolate<Mat2>(ts[s].grid, x, [&](std::size_t n) { return ts[s].beta[n]; });
    };
    return w == 0.0 ? at(k) : lerp_value(at(k), at(k + 1), w);
  };
  const int dim = g0.dim();
  const bool td = shared->size() > 1;
  return DiffusionModel(dim, ModelFamily::Tabulated, drift, beta, td);
}

Mat2 eval_a(const DiffusionModel& model, const Point& x, double t) {
  const Mat2 b = model.beta(x, t);
  Mat2 a{};
  a[0][0] = 0.5 * (b[0][0] * b[0][0] + b[0][1] * b[0][1]);
  a[1][1] = 0.5 * (b[1][0] * b[1][0] + b[1][1] * b[1][1]);
  a[0][1] = 0.5 * (b[0][0] * b[1][0] + b[0][1] * b[1][1]);
  a[1][0] = a[0][1];
  return a;
}

std::array<double, 2> sym_eigenvalues(const Mat2& m, int dim) {
  if (dim == 1) return {m[0][0], m[0][0]};
  const double mean = 0.5 * (m[0][0] + m[1][1]);
  const double half = 0.5 * (m[0][0] - m[1][1]);
  const double r = std::hypot(half, m[0][1]);
  return {mean - r, mean + r};
}

double check_ellipticity(const DiffusionModel& model, const DomainGrid& grid,
                         std::span<const double> times) {
  if (model.dim() != grid.dim()) {
    throw Error(ErrorKind::InvalidArgument, "model and grid dimensions differ");
  }
  double delta = std::numeric_limits<double>::infinity();
  for (double t : times) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Point x = grid.node(k);
      const Vec2 f = model.drift(x, t);
      const Mat2 a = eval_a(model, x, t);
      // beta beta^T = 2a
      const double lam = 2.0 * sym_eigenvalues(a, model.dim())[0];
      const bool finite = std::isfinite(f[0]) && std::isfinite(f[1]) && std::isfinite(lam);
      if (!finite || lam <= 0.0) {
        std::ostringstream os;
        os << "beta beta^T is not positive definite at x=(" << x[0];
        if (model.dim() == 2) os << ", " << x[1];
        os << "), t=" << t << ": smallest eigenvalue " << lam;
        if (!finite) os << " (non-finite coefficient)";
        throw Error(ErrorKind::EllipticityViolation, os.str());
      }
      delta = std::min(delta, lam);
    }
  }
  return delta;
}

double certify(DiffusionModel& model, const DomainGrid& grid, std::span<const double> times) {
  const double delta = check_ellipticity(model, grid, times);
  model.set_delta(delta);
  return delta;
}

double max_a_norm(const DiffusionModel& model, const DomainGrid& grid,
                  std::span<const double> times) {
  double m = 0.0;
  for (double t : times)
    for (std::size_t k = 0; k < grid.size(); ++k)
      m = std::max(m, sym_eigenvalues(eval_a(model, grid.node(k), t), model.dim())[1]);
  return m;
}

double max_drift(const DiffusionModel& model, const DomainGrid& grid,
                 std::span<const double> times) {
  double m = 0.0;
  for (double t : times)
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Vec2 f = model.drift(grid.node(k), t);
      m = std::max({m, std::abs(f[0]), std::abs(f[1])});
    }
  return m;
}

}  // namespace absorb
