#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "absorb/errors.hpp"
#include "absorb/kolmogorov.hpp"
#include "absorb/model.hpp"
#include "absorb/seedpipe.hpp"

namespace absorb::cli {

// Process exit codes. Part of the public contract.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kEllipticity = 3,
  kGammaZero = 4,
  kGammaNegative = 5,
  kLinearSolve = 6,
  kNoConvergence = 7,
  kNegativity = 8,
  kResidualTooLarge = 9,
  kShapeMismatch = 10,
  kCapExceeded = 11,
  kNotADensity = 12,
  kIo = 13,
  kVerificationFailed = 14,
  kMcInconsistent = 15,
};

int exit_code(ErrorKind kind);

struct DomainBlock {
  int dim = 1;
  std::vector<double> lo{0.0};
  std::vector<double> hi{1.0};
  std::vector<std::size_t> n_cells{128};
};

struct ModelBlock {
  std::string family = "constant";
  std::vector<double> drift{0.0};             // constant
  std::vector<double> rate, centre;           // linear-drift
  std::vector<std::vector<double>> beta{{1.0}};
  std::string file;                           // tabulated, absolute
};

struct TimeBlock {
  double T = 1.0;
  std::size_t n_steps = 256;
  Scheme scheme = Scheme::ImplicitEuler;
  LinearSolver linear_solver = LinearSolver::Direct;
  double linear_solver_tol = 1e-13;
  std::size_t linear_solver_max_iter = 2000;
};

struct GammaBlock {
  std::string kind = "eigenmode";
  std::vector<double> lo, hi;
  double value = 1.0;
  std::vector<std::vector<double>> breaks;
  std::vector<double> values;
  std::string file;
};

struct ToleranceBlock {
  double resolvent = 1e-10;
  std::size_t resolvent_max_iter = 500;
  double residual = 1e-6;
  double eps_neg = 1e-10;
};

struct McBlock {
  std::size_t n_particles = 100000;
  std::optional<double> dt;  // resolved to default_dt when absent
  std::optional<std::uint64_t> seed;  // generated when absent
  std::size_t bins = 32;
  double z_bound = 4.0;
  double min_fraction = 0.95;
};

struct SpectrumBlock {
  double tol = 1e-10;
  std::size_t max_iter = 2000;
  std::size_t cap = 4096;
};

struct RunConfig {
  DomainBlock domain;
  ModelBlock model;
  TimeBlock time;
  GammaBlock gamma;
  ToleranceBlock tolerances;
  McBlock mc;
  SpectrumBlock spectrum;
  std::string output = "out";
};

// Validates every block; unknown keys are rejected. Relative file paths are
// resolved against base_dir. Throws Error(Config).
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

// The effective configuration with all defaults filled in; parsing it again
// yields the same RunConfig.
nlohmann::json to_json(const RunConfig& config);

// Applies "a.b.c=value" to a raw document. The value is parsed as JSON when
// possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

DomainGrid build_grid(const RunConfig& config);
DiffusionModel build_model(const RunConfig& config, const DomainGrid& grid);
SolverConfig build_solver(const RunConfig& config);
GammaSpec build_gamma(const RunConfig& config, const DomainGrid& grid);
SeedOptions build_seed_options(const RunConfig& config);

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace absorb::cli
