#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absorb/grid.hpp"

namespace absorb {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

enum class ModelFamily { Constant, LinearDrift, Tabulated, Custom };

const char* to_string(ModelFamily family);

// Drift f(x,t) and diffusion factor beta(x,t) of the SDE
//   dy = f(y,t) dt + beta(y,t) dw,
// restricted to dim 1 or 2. Entries beyond dim are ignored and reported as 0.
// Evaluation is pure, so a model can be shared across threads.
class DiffusionModel {
 public:
  using DriftFn = std::function<Vec2(const Point&, double)>;
  using BetaFn = std::function<Mat2(const Point&, double)>;

  DiffusionModel(int dim, ModelFamily family, DriftFn drift, BetaFn beta, bool time_dependent);

  int dim() const { return dim_; }
  ModelFamily family() const { return family_; }
  bool time_dependent() const { return time_dependent_; }

  Vec2 drift(const Point& x, double t) const;
  Mat2 beta(const Point& x, double t) const;

  // Certified ellipticity bound, set by certify().
  std::optional<double> delta() const { return delta_; }
  void set_delta(double delta) { delta_ = delta; }

 private:
  int dim_;
  ModelFamily family_;
  DriftFn drift_;
  BetaFn beta_;
  bool time_dependent_;
  std::optional<double> delta_;
};

DiffusionModel constant_model(int dim, Vec2 drift, Mat2 beta);

// Ornstein-Uhlenbeck-type drift f_i(x) = -rate_i * (x_i - centre_i) with constant beta.
DiffusionModel linear_drift_model(int dim, Vec2 rate, Vec2 centre, Mat2 beta);

DiffusionModel custom_model(int dim, DiffusionModel::DriftFn drift, DiffusionModel::BetaFn beta,
                            bool time_dependent);

// Coefficients sampled on the nodes of a cell-centred grid at one instant.
struct CoefficientTable {
  double time = 0.0;
  DomainGrid grid;
  std::vector<Vec2> drift;  // one per node, flat-index order
  std::vector<Mat2> beta;
};

// Multilinear interpolation between table nodes (clamped to the outermost
// nodes), linear interpolation between time samples (clamped at the ends).
// Tables must share a grid and be sorted by time. The tables should resolve
// at least the solver grid; smoothness of beta is the caller's obligation.
DiffusionModel tabulated_model(std::vector<CoefficientTable> tables);

// a = 1/2 beta beta^T; exactly symmetric.
Mat2 eval_a(const DiffusionModel& model, const Point& x, double t);

// Minimum over grid nodes and the given times of the smallest eigenvalue of
// beta beta^T. Throws Error(EllipticityViolation) naming the offending (x,t)
// when that eigenvalue is not positive, or when a coefficient is not finite.
double check_ellipticity(const DiffusionModel& model, const DomainGrid& grid,
                         std::span<const double> times);

// check_ellipticity, then records delta on the model.
double certify(DiffusionModel& model, const DomainGrid& grid, std::span<const double> times);

// Largest eigenvalue of a over nodes and times.
double max_a_norm(const DiffusionModel& model, const DomainGrid& grid,
                  std::span<const double> times);

// Largest |f_i| over nodes and times.
double max_drift(const DiffusionModel& model, const DomainGrid& grid,
                 std::span<const double> times);

// Eigenvalues (ascending) of a symmetric 2x2 matrix restricted to dim.
std::array<double, 2> sym_eigenvalues(const Mat2& m, int dim);

}  // namespace absorb
