#pragma once

#include <Eigen/Dense>

#include "absorb/kolmogorov.hpp"

namespace absorb {

// The time-T solution map Q: xi -> v(., T) of the absorbed forward equation
// started at time 0.
class SolutionOperator {
 public:
  SolutionOperator(const DiffusionModel& model, const DomainGrid& grid, const SolverConfig& config,
                   double T);

  const DomainGrid& grid() const { return propagator_.grid(); }
  double horizon() const { return T_; }
  const Propagator& propagator() const { return propagator_; }

  DensityField apply(const DensityField& xi) const { return propagator_.advance(xi); }
  // Matrix-free view on raw node vectors.
  LinearMap as_map() const;

 private:
  Propagator propagator_;
  double T_;
};

DensityField apply_Q(const DiffusionModel& model, const DomainGrid& grid,
                     const SolverConfig& config, const DensityField& xi, double T);

// Dense surrogate of Q acting on nodal values: column j is Q applied to the
// indicator of cell j. Its column sums are the survival fractions of mass
// started in each cell.
struct OperatorMatrix {
  DomainGrid grid;
  Scheme scheme = Scheme::ImplicitEuler;
  double T = 0.0;
  Eigen::MatrixXd q;

  std::size_t size() const { return static_cast<std::size_t>(q.rows()); }
  double column_mass(std::size_t j) const { return q.col(static_cast<Eigen::Index>(j)).sum(); }
  double min_entry() const { return q.minCoeff(); }
};

constexpr std::size_t kDefaultAssemblyCap = 4096;

// Columns are computed concurrently. Throws Error(CapExceeded) when the grid
// has more than cap nodes.
OperatorMatrix assemble_Q(const DiffusionModel& model, const DomainGrid& grid,
                          const SolverConfig& config, double T,
                          std::size_t cap = kDefaultAssemblyCap);

// Serial column loop, kept as the reference for assemble_Q.
OperatorMatrix assemble_Q_serial(const DiffusionModel& model, const DomainGrid& grid,
                                 const SolverConfig& config, double T,
                                 std::size_t cap = kDefaultAssemblyCap);

struct SpectralEstimate {
  double radius = 0.0;    // geometric mean of the last two growth factors
  double rayleigh = 0.0;  // <v, Qv> / <v, v> at the last iterate
  std::size_t iterations = 0;
  bool converged = false;
};

// Power iteration from the constant positive vector. Stops when the radius
// estimate changes by at most tol relative; otherwise returns the last
// iterate with converged = false. Averaging over two steps keeps the
// estimate stable for complex-conjugate dominant pairs.
SpectralEstimate spectral_radius(const LinearMap& q, std::size_t n, double tol,
                                 std::size_t max_iter = 2000);
SpectralEstimate spectral_radius(const OperatorMatrix& q, double tol,
                                 std::size_t max_iter = 2000);

enum class ResolventMethod { Neumann, Krylov };
const char* to_string(ResolventMethod m);

struct ResolventReport {
  DensityField zeta;
  std::size_t iterations = 0;  // applications of Q
  double residual_norm = 0.0;  // L2(zeta - Q zeta - gamma) / L2(gamma)
  ResolventMethod method = ResolventMethod::Neumann;
};

struct ResolventOptions {
  double tol = 1e-10;
  std::size_t max_iter = 500;
  // Neumann is abandoned when this many successive residual ratios are at
  // least stall_ratio.
  double stall_ratio = 0.999;
  std::size_t stall_window = 5;
  std::size_t krylov_restart = 40;
};

// Solves (I - Q) zeta = gamma: Neumann iteration zeta <- gamma + Q zeta from
// zeta = gamma, falling back to restarted GMRES on I - Q when the contraction
// stalls. Throws Error(NoConvergence) when both phases run out of iterations.
ResolventReport solve_resolvent(const SolutionOperator& q, const DensityField& gamma,
                                const ResolventOptions& options);
ResolventReport solve_resolvent(const DiffusionModel& model, const DomainGrid& grid,
                                const SolverConfig& config, double T, const DensityField& gamma,
                                double tol, std::size_t max_iter);

// Dense LU solve of (I - Q) zeta = gamma on an assembled matrix.
DensityField solve_resolvent_dense(const OperatorMatrix& q, const DensityField& gamma);

// Singular values, descending.
Eigen::VectorXd singular_values(const OperatorMatrix& q);

}  // namespace absorb
