#include "absorb/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "absorb/errors.hpp"

namespace absorb::io {

namespace {

std::vector<std::vector<double>> read_numeric_csv(const fs::path& path, std::string& header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  if (!std::getline(in, header)) throw Error(ErrorKind::Io, path.string() + " is empty");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw Error(ErrorKind::Io, path.string() + ":" + std::to_string(lineno) +
                                       ": not a number: '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t count_distinct(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i == 0 || std::abs(v[i] - v[i - 1]) > 1e-9 * (1.0 + std::abs(v[i]))) ++n;
  }
  return n;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_field_csv(const fs::path& path, const DensityField& field) {
  const DomainGrid& g = field.grid();
  std::string s = g.dim() == 1 ? "x,value\n" : "x,y,value\n";
  for (std::size_t k = 0; k < field.size(); ++k) {
    const Point x = g.node(k);
    s += format_double(x[0]);
    s += ',';
    if (g.dim() == 2) {
      s += format_double(x[1]);
      s += ',';
    }
    s += format_double(field[k]);
    s += '\n';
  }
  write_text(path, s);
}

DensityField read_field_csv(const fs::path& path, const DomainGrid& grid) {
  std::string header;
  const auto rows = read_numeric_csv(path, header);
  const std::size_t cols = static_cast<std::size_t>(grid.dim()) + 1;
  if (rows.size() != grid.size()) {
    throw Error(ErrorKind::ShapeMismatch, path.string() + " has " + std::to_string(rows.size()) +
                                              " rows, grid has " + std::to_string(grid.size()) +
                                              " nodes");
  }
  std::vector<double> values(grid.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != cols) {
      throw Error(ErrorKind::ShapeMismatch, path.string() + ": row " + std::to_string(k + 1) +
                                                " must have " + std::to_string(cols) + " columns");
    }
    const Point x = grid.node(k);
    for (int a = 0; a < grid.dim(); ++a) {
      if (std::abs(rows[k][static_cast<std::size_t>(a)] - x[a]) > 1e-6 * grid.h(a)) {
        throw Error(ErrorKind::ShapeMismatch, path.string() + ": row " + std::to_string(k + 1) +
                                                  " is not at the expected node");
      }
    }
    values[k] = rows[k].back();
  }
  return DensityField(grid, std::move(values));
}

CoefficientTable read_coefficient_csv(const fs::path& path, int dim, const Point& lo,
                                      const Point& hi, double time) {
  std::string header;
  const auto rows = read_numeric_csv(path, header);
  const auto d = static_cast<std::size_t>(dim);
  const std::size_t cols = d + d + d * d;
  if (rows.empty()) throw Error(ErrorKind::Io, path.string() + " has no rows");
  std::array<std::vector<double>, 2> coords;
  for (const auto& r : rows) {
    if (r.size() != cols) {
      throw Error(ErrorKind::ShapeMismatch, path.string() + ": expected " + std::to_string(cols) +
                                                " columns per row");
    }
    for (std::size_t a = 0; a < d; ++a) coords[a].push_back(r[a]);
  }
  std::vector<double> l(lo.begin(), lo.begin() + dim), h(hi.begin(), hi.begin() + dim);
  std::vector<std::size_t> n;
  for (std::size_t a = 0; a < d; ++a) n.push_back(count_distinct(coords[a]));
  CoefficientTable t;
  t.time = time;
  t.grid = make_grid(dim, l, h, n);
  if (t.grid.size() != rows.size()) {
    throw Error(ErrorKind::ShapeMismatch, path.string() + " is not a full tensor grid");
  }
  t.drift.resize(rows.size());
  t.beta.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Point x = t.grid.node(k);
    for (std::size_t a = 0; a < d; ++a) {
      if (std::abs(rows[k][a] - x[a]) > 1e-6 * t.grid.h(static_cast<int>(a))) {
        throw Error(ErrorKind::ShapeMismatch,
                    path.string() + ": rows are not cell centres in flat-index order");
      }
    }
    Vec2 f{0.0, 0.0};
    Mat2 b{};
    for (std::size_t a = 0; a < d; ++a) f[a] = rows[k][d + a];
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) b[r][c] = rows[k][2 * d + r * d + c];
    t.drift[k] = f;
    t.beta[k] = b;
  }
  return t;
}

void write_coefficient_csv(const fs::path& path, const CoefficientTable& t) {
  const int dim = t.grid.dim();
  std::string s = dim == 1 ? "x,f1,b11\n" : "x,y,f1,f2,b11,b12,b21,b22\n";
  for (std::size_t k = 0; k < t.grid.size(); ++k) {
    const Point x = t.grid.node(k);
    std::vector<double> row{x[0]};
    if (dim == 2) row.push_back(x[1]);
    for (int a = 0; a < dim; ++a) row.push_back(t.drift[k][a]);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) row.push_back(t.beta[k][r][c]);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s += ',';
      s += format_double(row[i]);
    }
    s += '\n';
  }
  write_text(path, s);
}

DiffusionModel read_tabulated_model(const fs::path& path, int dim, const Point& lo,
                                    const Point& hi) {
  std::vector<CoefficientTable> tables;
  if (path.extension() == ".json") {
    json manifest;
    try {
      manifest = json::parse(read_text(path));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Io, path.string() + ": " + e.what());
    }
    if (!manifest.contains("samples") || !manifest["samples"].is_array()) {
      throw Error(ErrorKind::Io, path.string() + ": manifest needs a 'samples' array");
    }
    for (const auto& s : manifest["samples"]) {
      const fs::path file = path.parent_path() / s.at("file").get<std::string>();
      tables.push_back(read_coefficient_csv(file, dim, lo, hi, s.at("time").get<double>()));
    }
  } else {
    tables.push_back(read_coefficient_csv(path, dim, lo, hi, 0.0));
  }
  return tabulated_model(std::move(tables));
}

void write_mass_curve_csv(const fs::path& path,
                          const std::vector<std::pair<double, double>>& curve) {
  std::string s = "time,mass\n";
  for (const auto& [t, m] : curve) s += format_double(t) + "," + format_double(m) + "\n";
  write_text(path, s);
}

std::vector<std::string> write_trajectory(const fs::path& dir, const Trajectory& traj) {
  fs::create_directories(dir);
  std::vector<std::string> files;
  json manifest;
  manifest["grid"] = grid_descriptor(traj.grid);
  manifest["positivity_unverified"] = traj.positivity_unverified;
  manifest["fields"] = json::array();
  for (std::size_t k = 0; k < traj.fields.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "field_%05zu.csv", k);
    write_field_csv(dir / name, traj.fields[k]);
    manifest["fields"].push_back({{"time", traj.times[k]}, {"file", name}});
    files.emplace_back(name);
  }
  write_mass_curve_csv(dir / "mass_curve.csv", mass_curve(traj));
  files.emplace_back("mass_curve.csv");
  write_text(dir / "trajectory.json", manifest.dump(2) + "\n");
  files.emplace_back("trajectory.json");
  return files;
}

json grid_descriptor(const DomainGrid& g) {
  json lo = json::array(), hi = json::array(), n = json::array();
  for (int a = 0; a < g.dim(); ++a) {
    lo.push_back(g.lo(a));
    hi.push_back(g.hi(a));
    n.push_back(g.n_cells(a));
  }
  return {{"dim", g.dim()}, {"lo", lo}, {"hi", hi}, {"n_cells", n}};
}

void write_operator_matrix(const fs::path& bin_path, const fs::path& json_path,
                           const OperatorMatrix& q) {
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + bin_path.string());
  const auto n = static_cast<Eigen::Index>(q.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      auto bits = std::bit_cast<std::uint64_t>(q.q(i, j));
      unsigned char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
      out.write(reinterpret_cast<const char*>(bytes), 8);
    }
  }
  const json side = {{"N", q.size()},
                     {"grid", grid_descriptor(q.grid)},
                     {"scheme", to_string(q.scheme)},
                     {"T", q.T},
                     {"layout", "column-major little-endian float64"}};
  write_text(json_path, side.dump(2) + "\n");
}

Eigen::MatrixXd read_operator_matrix(const fs::path& bin_path, std::size_t n) {
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + bin_path.string());
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd q(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      unsigned char bytes[8];
      if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
        throw Error(ErrorKind::ShapeMismatch, bin_path.string() + " is too short");
      }
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= std::uint64_t{bytes[b]} << (8 * b);
      q(i, j) = std::bit_cast<double>(bits);
    }
  }
  return q;
}

json to_json(const ResolventReport& r) {
  return {{"iterations", r.iterations},
          {"residual_norm", r.residual_norm},
          {"method", to_string(r.method)}};
}

json mass_curve_json(const std::vector<std::pair<double, double>>& curve) {
  json arr = json::array();
  for (const auto& [t, m] : curve) arr.push_back({t, m});
  return arr;
}

std::vector<std::string> write_seed_solution(const fs::path& dir, const SeedSolution& sol) {
  fs::create_directories(dir);
  write_field_csv(dir / "rho.csv", sol.rho);
  write_field_csv(dir / "u0.csv", sol.u0);
  write_field_csv(dir / "uT.csv", sol.uT);
  write_field_csv(dir / "zeta.csv", sol.zeta);
  write_field_csv(dir / "gamma.csv", sol.gamma.field);
  // p(0) - p(T) with p(T) = alpha Q u0
  write_field_csv(dir / "decrement.csv", sol.rho - sol.alpha * sol.uT);
  const json report = {{"alpha", sol.alpha},
                       {"residual", sol.residual},
                       {"negativity", sol.negativity},
                       {"clamped", sol.clamped},
                       {"iterations", sol.report.iterations},
                       {"method", to_string(sol.report.method)},
                       {"resolvent_residual", sol.report.residual_norm},
                       {"mass_rho", mass(sol.rho)},
                       {"min_rho", min_value(sol.rho)},
                       {"mass_curve", mass_curve_json(sol.mass_curve)}};
  write_text(dir / "report.json", report.dump(2) + "\n");
  return {"rho.csv", "u0.csv", "uT.csv", "zeta.csv", "gamma.csv", "decrement.csv", "report.json"};
}

SeedSolution read_seed_solution(const fs::path& dir, const DomainGrid& grid,
                                const TargetProfile& gamma) {
  SeedSolution sol;
  sol.gamma = gamma;
  sol.rho = read_field_csv(dir / "rho.csv", grid);
  sol.u0 = read_field_csv(dir / "u0.csv", grid);
  sol.uT = read_field_csv(dir / "uT.csv", grid);
  sol.zeta = read_field_csv(dir / "zeta.csv", grid);
  json report;
  try {
    report = json::parse(read_text(dir / "report.json"));
    sol.alpha = report.at("alpha").get<double>();
    sol.residual = report.at("residual").get<double>();
    sol.negativity = report.value("negativity", 0.0);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, (dir / "report.json").string() + ": " + e.what());
  }
  return sol;
}

void write_mc_csv(const fs::path& path, const MCEstimate& est) {
  const DomainGrid& g = est.histogram.grid();
  std::string s = g.dim() == 1 ? "x,density,stderr\n" : "x,y,density,stderr\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.node(k);
    s += format_double(x[0]) + ",";
    if (g.dim() == 2) s += format_double(x[1]) + ",";
    s += format_double(est.histogram[k]) + "," + format_double(est.stderr_field[k]) + "\n";
  }
  write_text(path, s);
}

}  // namespace absorb::io
