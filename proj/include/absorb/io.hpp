#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "absorb/fredholm.hpp"
#include "absorb/kolmogorov.hpp"
#include "absorb/model.hpp"
#include "absorb/montecarlo.hpp"
#include "absorb/seedpipe.hpp"

namespace absorb::io {

namespace fs = std::filesystem;
using nlohmann::json;

// Field CSV: header "x,value" (1-D) or "x,y,value" (2-D), one row per node in
// flat-index order, values printed with 17 significant digits.
void write_field_csv(const fs::path& path, const DensityField& field);
// Throws Error(ShapeMismatch) when the row count or node coordinates do not
// match the grid, Error(Io) when the file cannot be read or parsed.
DensityField read_field_csv(const fs::path& path, const DomainGrid& grid);

// Coefficient CSV: x[,y], f1..f_dim, b11, b12, ..., b_dim,dim (row-major), in
// flat-index order on a cell-centred grid over the box [lo, hi]. The grid's
// cell counts are inferred from the distinct coordinates.
CoefficientTable read_coefficient_csv(const fs::path& path, int dim, const Point& lo,
                                      const Point& hi, double time);
void write_coefficient_csv(const fs::path& path, const CoefficientTable& table);

// Either a single coefficient CSV or a JSON manifest
// {"samples": [{"time": t, "file": "name.csv"}, ...]}, paths relative to it.
DiffusionModel read_tabulated_model(const fs::path& path, int dim, const Point& lo,
                                    const Point& hi);

void write_mass_curve_csv(const fs::path& path, const std::vector<std::pair<double, double>>& curve);

// field_NNNNN.csv per stored time, mass_curve.csv, and trajectory.json
// listing {time, file} pairs. Returns the files written, relative to dir.
std::vector<std::string> write_trajectory(const fs::path& dir, const Trajectory& traj);

json grid_descriptor(const DomainGrid& grid);

// N*N little-endian float64, column-major, plus a JSON sidecar
// {N, grid, scheme, T}.
void write_operator_matrix(const fs::path& bin_path, const fs::path& json_path,
                           const OperatorMatrix& q);
Eigen::MatrixXd read_operator_matrix(const fs::path& bin_path, std::size_t n);

json to_json(const ResolventReport& report);
json mass_curve_json(const std::vector<std::pair<double, double>>& curve);

// rho.csv, u0.csv, uT.csv, zeta.csv, gamma.csv, decrement.csv, report.json.
std::vector<std::string> write_seed_solution(const fs::path& dir, const SeedSolution& sol);
// Restores the fields and alpha written by write_seed_solution; gamma is
// supplied by the caller.
SeedSolution read_seed_solution(const fs::path& dir, const DomainGrid& grid,
                                const TargetProfile& gamma);

// Bin coordinates, density and stderr per cell.
void write_mc_csv(const fs::path& path, const MCEstimate& est);

std::string format_double(double v);
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace absorb::io
