#include "absorb/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "absorb/fredholm.hpp"
#include "absorb/io.hpp"
#include "absorb/montecarlo.hpp"

namespace absorb::cli {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return kConfig;
    case ErrorKind::Config: return kConfig;
    case ErrorKind::EllipticityViolation: return kEllipticity;
    case ErrorKind::GammaZero: return kGammaZero;
    case ErrorKind::GammaNegative: return kGammaNegative;
    case ErrorKind::LinearSolveFailure: return kLinearSolve;
    case ErrorKind::NoConvergence: return kNoConvergence;
    case ErrorKind::NegativityViolation: return kNegativity;
    case ErrorKind::ResidualTooLarge: return kResidualTooLarge;
    case ErrorKind::ShapeMismatch: return kShapeMismatch;
    case ErrorKind::CapExceeded: return kCapExceeded;
    case ErrorKind::NotADensity: return kNotADensity;
    case ErrorKind::Io: return kIo;
  }
  return kInternal;
}

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

// Reads members of one JSON object and rejects anything not consumed.
class Block {
 public:
  Block(const json& doc, std::string path) : path_(std::move(path)) {
    if (doc.is_null()) {
      obj_ = json::object();
    } else if (!doc.is_object()) {
      config_error(path_ + " must be an object");
    } else {
      obj_ = doc;
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) && !obj_[key].is_null();
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return obj_[key].get<T>();
    } catch (const json::exception&) {
      config_error(path_ + "." + key + " has the wrong type");
    }
  }

  template <class T>
  T require(const std::string& key) {
    if (!has(key)) config_error(path_ + "." + key + " is required");
    return get<T>(key, T{});
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_[key];
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) config_error("unknown key " + path_ + "." + it.key());
    }
  }

  const std::string& path() const { return path_; }

 private:
  json obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string resolve_path(const std::string& p, const fs::path& base) {
  if (p.empty()) return p;
  const fs::path path(p);
  return (path.is_absolute() ? path : fs::absolute(base / path)).lexically_normal().string();
}

std::vector<std::vector<double>> parse_matrix(const json& j, int dim, const std::string& where) {
  if (j.is_number() && dim == 1) return {{j.get<double>()}};
  try {
    auto m = j.get<std::vector<std::vector<double>>>();
    if (m.size() != static_cast<std::size_t>(dim)) config_error(where + " must be dim x dim");
    for (const auto& r : m)
      if (r.size() != static_cast<std::size_t>(dim)) config_error(where + " must be dim x dim");
    return m;
  } catch (const json::exception&) {
    config_error(where + " must be a dim x dim array of numbers");
  }
}

void require_len(const std::vector<double>& v, int dim, const std::string& where) {
  if (v.size() != static_cast<std::size_t>(dim)) {
    config_error(where + " must have " + std::to_string(dim) + " entries");
  }
}

}  // namespace

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
  RunConfig c;
  Block top(doc, "config");

  {
    Block b(top.raw("domain"), "domain");
    c.domain.dim = b.get<int>("dim", 1);
    if (c.domain.dim != 1 && c.domain.dim != 2) config_error("domain.dim must be 1 or 2");
    const int d = c.domain.dim;
    c.domain.lo = b.get<std::vector<double>>("lo", std::vector<double>(d, 0.0));
    c.domain.hi = b.get<std::vector<double>>("hi", std::vector<double>(d, 1.0));
    c.domain.n_cells = b.get<std::vector<std::size_t>>("n_cells", std::vector<std::size_t>(d, 128));
    require_len(c.domain.lo, d, "domain.lo");
    require_len(c.domain.hi, d, "domain.hi");
    if (c.domain.n_cells.size() != static_cast<std::size_t>(d)) {
      config_error("domain.n_cells must have dim entries");
    }
    b.finish();
  }
  const int dim = c.domain.dim;

  {
    Block b(top.raw("model"), "model");
    c.model.family = b.get<std::string>("family", "constant");
    if (c.model.family == "constant") {
      c.model.drift = b.get<std::vector<double>>("drift", std::vector<double>(dim, 0.0));
      require_len(c.model.drift, dim, "model.drift");
      c.model.beta = b.has("beta") ? parse_matrix(b.raw("beta"), dim, "model.beta")
                                   : parse_matrix(json(1.0), 1, "model.beta");
      if (!b.has("beta") && dim == 2) c.model.beta = {{1.0, 0.0}, {0.0, 1.0}};
    } else if (c.model.family == "linear-drift") {
      c.model.rate = b.require<std::vector<double>>("rate");
      c.model.centre = b.require<std::vector<double>>("centre");
      require_len(c.model.rate, dim, "model.rate");
      require_len(c.model.centre, dim, "model.centre");
      if (b.has("beta")) {
        c.model.beta = parse_matrix(b.raw("beta"), dim, "model.beta");
      } else {
        c.model.beta = dim == 1 ? std::vector<std::vector<double>>{{1.0}}
                                : std::vector<std::vector<double>>{{1.0, 0.0}, {0.0, 1.0}};
      }
      c.model.drift.clear();
    } else if (c.model.family == "tabulated") {
      c.model.file = resolve_path(b.require<std::string>("file"), base_dir);
      c.model.drift.clear();
      c.model.beta.clear();
    } else {
      config_error("model.family must be constant, linear-drift or tabulated");
    }
    b.finish();
  }

  {
    Block b(top.raw("time"), "time");
    c.time.T = b.get<double>("T", 1.0);
    if (!(c.time.T > 0.0)) config_error("time.T must be positive");
    c.time.n_steps = b.get<std::size_t>("n_steps", 256);
    if (c.time.n_steps < 1) config_error("time.n_steps must be at least 1");
    try {
      c.time.scheme = scheme_from_string(b.get<std::string>("scheme", "implicit-euler"));
    } catch (const Error& e) {
      config_error(std::string("time.scheme: ") + e.what());
    }
    const auto solver = b.get<std::string>("linear_solver", "direct");
    if (solver == "direct") c.time.linear_solver = LinearSolver::Direct;
    else if (solver == "bicgstab") c.time.linear_solver = LinearSolver::BiCGStab;
    else config_error("time.linear_solver must be direct or bicgstab");
    c.time.linear_solver_tol = b.get<double>("linear_solver_tol", 1e-13);
    c.time.linear_solver_max_iter = b.get<std::size_t>("linear_solver_max_iter", 2000);
    if (!(c.time.linear_solver_tol > 0.0)) config_error("time.linear_solver_tol must be positive");
    b.finish();
  }

  {
    Block b(top.raw("gamma"), "gamma");
    c.gamma.kind = b.get<std::string>("kind", "eigenmode");
    if (c.gamma.kind == "eigenmode") {
    } else if (c.gamma.kind == "bump") {
      c.gamma.lo = b.require<std::vector<double>>("lo");
      c.gamma.hi = b.require<std::vector<double>>("hi");
      c.gamma.value = b.get<double>("value", 1.0);
      require_len(c.gamma.lo, dim, "gamma.lo");
      require_len(c.gamma.hi, dim, "gamma.hi");
    } else if (c.gamma.kind == "tiles") {
      c.gamma.breaks = b.require<std::vector<std::vector<double>>>("breaks");
      c.gamma.values = b.require<std::vector<double>>("values");
      if (c.gamma.breaks.size() != static_cast<std::size_t>(dim)) {
        config_error("gamma.breaks needs one list per axis");
      }
    } else if (c.gamma.kind == "csv") {
      c.gamma.file = resolve_path(b.require<std::string>("file"), base_dir);
    } else {
      config_error("gamma.kind must be eigenmode, bump, tiles or csv");
    }
    b.finish();
  }

  {
    Block b(top.raw("tolerances"), "tolerances");
    c.tolerances.resolvent = b.get<double>("resolvent", 1e-10);
    c.tolerances.resolvent_max_iter = b.get<std::size_t>("resolvent_max_iter", 500);
    c.tolerances.residual = b.get<double>("residual", 1e-6);
    c.tolerances.eps_neg = b.get<double>("eps_neg", 1e-10);
    if (!(c.tolerances.resolvent > 0.0) || !(c.tolerances.residual > 0.0) ||
        !(c.tolerances.eps_neg >= 0.0)) {
      config_error("tolerances must be positive");
    }
    b.finish();
  }

  {
    Block b(top.raw("mc"), "mc");
    c.mc.n_particles = b.get<std::size_t>("n_particles", 100000);
    if (c.mc.n_particles < 1) config_error("mc.n_particles must be at least 1");
    if (b.has("dt")) {
      c.mc.dt = b.get<double>("dt", 0.0);
      if (!(*c.mc.dt > 0.0)) config_error("mc.dt must be positive");
    }
    if (b.has("seed")) c.mc.seed = b.get<std::uint64_t>("seed", 0);
    c.mc.bins = b.get<std::size_t>("bins", 32);
    c.mc.z_bound = b.get<double>("z_bound", 4.0);
    c.mc.min_fraction = b.get<double>("min_fraction", 0.95);
    b.finish();
  }

  {
    Block b(top.raw("spectrum"), "spectrum");
    c.spectrum.tol = b.get<double>("tol", 1e-10);
    c.spectrum.max_iter = b.get<std::size_t>("max_iter", 2000);
    c.spectrum.cap = b.get<std::size_t>("cap", kDefaultAssemblyCap);
    if (!(c.spectrum.tol > 0.0)) config_error("spectrum.tol must be positive");
    b.finish();
  }

  c.output = resolve_path(top.get<std::string>("output", "out"), base_dir);
  top.finish();
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["domain"] = {{"dim", c.domain.dim},
                 {"lo", c.domain.lo},
                 {"hi", c.domain.hi},
                 {"n_cells", c.domain.n_cells}};
  json m = {{"family", c.model.family}};
  if (c.model.family == "constant") {
    m["drift"] = c.model.drift;
    m["beta"] = c.model.beta;
  } else if (c.model.family == "linear-drift") {
    m["rate"] = c.model.rate;
    m["centre"] = c.model.centre;
    m["beta"] = c.model.beta;
  } else {
    m["file"] = c.model.file;
  }
  j["model"] = m;
  j["time"] = {{"T", c.time.T},
               {"n_steps", c.time.n_steps},
               {"scheme", to_string(c.time.scheme)},
               {"linear_solver", c.time.linear_solver == LinearSolver::Direct ? "direct" : "bicgstab"},
               {"linear_solver_tol", c.time.linear_solver_tol},
               {"linear_solver_max_iter", c.time.linear_solver_max_iter}};
  json g = {{"kind", c.gamma.kind}};
  if (c.gamma.kind == "bump") {
    g["lo"] = c.gamma.lo;
    g["hi"] = c.gamma.hi;
    g["value"] = c.gamma.value;
  } else if (c.gamma.kind == "tiles") {
    g["breaks"] = c.gamma.breaks;
    g["values"] = c.gamma.values;
  } else if (c.gamma.kind == "csv") {
    g["file"] = c.gamma.file;
  }
  j["gamma"] = g;
  j["tolerances"] = {{"resolvent", c.tolerances.resolvent},
                     {"resolvent_max_iter", c.tolerances.resolvent_max_iter},
                     {"residual", c.tolerances.residual},
                     {"eps_neg", c.tolerances.eps_neg}};
  json mc = {{"n_particles", c.mc.n_particles},
             {"bins", c.mc.bins},
             {"z_bound", c.mc.z_bound},
             {"min_fraction", c.mc.min_fraction}};
  mc["dt"] = c.mc.dt ? json(*c.mc.dt) : json(nullptr);
  mc["seed"] = c.mc.seed ? json(*c.mc.seed) : json(nullptr);
  j["mc"] = mc;
  j["spectrum"] = {{"tol", c.spectrum.tol},
                   {"max_iter", c.spectrum.max_iter},
                   {"cap", c.spectrum.cap}};
  j["output"] = c.output;
  return j;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) config_error("--set expects path=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &doc;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (node->is_null()) *node = json::object();
    if (!node->is_object()) config_error("--set " + path + ": '" + parts[i] + "' is not an object");
    node = &(*node)[parts[i]];
  }
  if (node->is_null()) *node = json::object();
  if (!node->is_object()) config_error("--set " + path + ": parent is not an object");
  (*node)[parts.back()] = value;
}

DomainGrid build_grid(const RunConfig& c) {
  try {
    return make_grid(c.domain.dim, c.domain.lo, c.domain.hi, c.domain.n_cells);
  } catch (const Error& e) {
    config_error(std::string("domain: ") + e.what());
  }
}

DiffusionModel build_model(const RunConfig& c, const DomainGrid& grid) {
  const int dim = c.domain.dim;
  auto to_mat = [&](const std::vector<std::vector<double>>& b) {
    Mat2 m{};
    for (int r = 0; r < dim; ++r)
      for (int k = 0; k < dim; ++k) m[r][k] = b[r][k];
    return m;
  };
  auto to_vec = [&](const std::vector<double>& v) {
    Vec2 out{0.0, 0.0};
    for (int a = 0; a < dim; ++a) out[a] = v[a];
    return out;
  };
  if (c.model.family == "constant") return constant_model(dim, to_vec(c.model.drift), to_mat(c.model.beta));
  if (c.model.family == "linear-drift") {
    return linear_drift_model(dim, to_vec(c.model.rate), to_vec(c.model.centre), to_mat(c.model.beta));
  }
  return io::read_tabulated_model(c.model.file, dim, {grid.lo(0), grid.lo(1)},
                                  {grid.hi(0), grid.hi(1)});
}

SolverConfig build_solver(const RunConfig& c) {
  SolverConfig s;
  s.n_steps = c.time.n_steps;
  s.scheme = c.time.scheme;
  s.linear_solver = c.time.linear_solver;
  s.linear_solver_tol = c.time.linear_solver_tol;
  s.linear_solver_max_iter = c.time.linear_solver_max_iter;
  return s;
}

GammaSpec build_gamma(const RunConfig& c, const DomainGrid& grid) {
  GammaSpec g;
  const int dim = c.domain.dim;
  if (c.gamma.kind == "eigenmode") {
    g.kind = GammaKind::Eigenmode;
  } else if (c.gamma.kind == "bump") {
    g.kind = GammaKind::Bump;
    for (int a = 0; a < dim; ++a) {
      g.lo[a] = c.gamma.lo[a];
      g.hi[a] = c.gamma.hi[a];
    }
    g.value = c.gamma.value;
  } else if (c.gamma.kind == "tiles") {
    g.kind = GammaKind::Tiles;
    for (int a = 0; a < dim; ++a) g.breaks[a] = c.gamma.breaks[a];
    g.tile_values = c.gamma.values;
  } else {
    g.kind = GammaKind::Csv;
    g.samples = io::read_field_csv(c.gamma.file, grid).data();
  }
  return g;
}

SeedOptions build_seed_options(const RunConfig& c) {
  SeedOptions o;
  o.T = c.time.T;
  o.resolvent_tol = c.tolerances.resolvent;
  o.resolvent_max_iter = c.tolerances.resolvent_max_iter;
  o.residual_tol = c.tolerances.residual;
  o.eps_neg_rel = c.tolerances.eps_neg;
  return o;
}

namespace {

std::string sha256_file(const fs::path& path) {
  const std::string data = io::read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

// Collects produced files and writes manifest.json last.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
  const fs::path& dir() const { return dir_; }
  fs::path operator/(const std::string& name) const { return dir_ / name; }

  void add(const std::string& rel) { files_.push_back(rel); }
  void add_all(const std::vector<std::string>& rels, const std::string& prefix = "") {
    for (const auto& r : rels) files_.push_back(prefix.empty() ? r : prefix + "/" + r);
  }
  void write_json(const std::string& name, const json& j) {
    io::write_text(dir_ / name, j.dump(2) + "\n");
    add(name);
  }
  void finish() {
    json m = {{"files", json::array()}};
    std::sort(files_.begin(), files_.end());
    for (const auto& f : files_) {
      m["files"].push_back({{"path", f}, {"sha256", sha256_file(dir_ / f)}});
    }
    io::write_text(dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

struct Context {
  RunConfig config;
  DomainGrid grid;
  DiffusionModel model;
  SolverConfig solver;
};

std::vector<double> step_times(const RunConfig& c) {
  std::vector<double> t;
  for (std::size_t k = 0; k <= c.time.n_steps; ++k) {
    t.push_back(c.time.T * static_cast<double>(k) / static_cast<double>(c.time.n_steps));
  }
  return t;
}

Context prepare(RunConfig config) {
  DomainGrid grid = build_grid(config);
  DiffusionModel model = build_model(config, grid);
  certify(model, grid, step_times(config));
  SolverConfig solver = build_solver(config);
  return {std::move(config), grid, std::move(model), solver};
}

json verification_json(const VerificationReport& v) {
  return {{"residual_same_steps", v.residual_same},
          {"residual_refined", v.residual_refined},
          {"residual_coarse", v.residual_coarse},
          {"refinement_consistent", v.residual_refined <= v.residual_coarse},
          {"mass_strictly_decreasing", v.mass_strictly_decreasing},
          {"passed", v.passed},
          {"mass_curve", io::mass_curve_json(v.mass_curve)}};
}

int cmd_seed(Context& ctx, Outputs& out) {
  const TargetProfile gamma = realize_gamma(build_gamma(ctx.config, ctx.grid), ctx.grid);
  const SeedOptions opt = build_seed_options(ctx.config);
  const SeedSolution sol = run_seed(ctx.model, ctx.grid, ctx.solver, gamma, opt);
  out.add_all(io::write_seed_solution(out.dir(), sol));
  const VerificationReport v = verify_seed(sol, ctx.model, ctx.grid, ctx.solver, opt);
  io::write_field_csv(out / "decrement_refined.csv", v.decrement);
  out.add("decrement_refined.csv");
  out.write_json("verification.json", verification_json(v));
  return v.passed ? kOk : kVerificationFailed;
}

int cmd_evolve(Context& ctx, Outputs& out, const std::string& rho_path) {
  const DensityField rho = io::read_field_csv(rho_path, ctx.grid);
  const Trajectory traj = evolve(ctx.model, ctx.grid, ctx.solver, rho, 0.0, ctx.config.time.T);
  out.add_all(io::write_trajectory(out / "trajectory", traj), "trajectory");
  io::write_mass_curve_csv(out / "mass_curve.csv", mass_curve(traj));
  out.add("mass_curve.csv");
  const DensityField& last = traj.fields.back();
  std::size_t peak = 0;
  for (std::size_t k = 0; k < last.size(); ++k) {
    if (last[k] > last[peak]) peak = k;
  }
  const Point xp = ctx.grid.node(peak);
  out.write_json("report.json", {{"T", ctx.config.time.T},
                                 {"n_steps", ctx.solver.n_steps},
                                 {"scheme", to_string(ctx.solver.scheme)},
                                 {"initial_mass", mass(traj.fields.front())},
                                 {"final_mass", mass(last)},
                                 {"final_peak", last.size() ? last[peak] : 0.0},
                                 {"final_peak_at", {xp[0], xp[1]}},
                                 {"positivity_unverified", traj.positivity_unverified}});
  return kOk;
}

int cmd_spectrum(Context& ctx, Outputs& out, bool assemble) {
  const SolutionOperator q(ctx.model, ctx.grid, ctx.solver, ctx.config.time.T);
  const SpectralEstimate est =
      spectral_radius(q.as_map(), ctx.grid.size(), ctx.config.spectrum.tol, ctx.config.spectrum.max_iter);
  json rep = {{"spectral_radius", est.radius},
              {"rayleigh_quotient", est.rayleigh},
              {"iterations", est.iterations},
              {"converged", est.converged},
              {"T", ctx.config.time.T}};
  if (assemble) {
    const OperatorMatrix m = assemble_Q(ctx.model, ctx.grid, ctx.solver, ctx.config.time.T,
                                        ctx.config.spectrum.cap);
    io::write_operator_matrix(out / "Q.bin", out / "Q.json", m);
    out.add("Q.bin");
    out.add("Q.json");
    const Eigen::VectorXd sv = singular_values(m);
    std::string csv = "index,singular_value\n";
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      csv += std::to_string(i + 1) + "," + io::format_double(sv(i)) + "\n";
    }
    io::write_text(out / "singular_values.csv", csv);
    out.add("singular_values.csv");
    double cmin = 1.0, cmax = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) {
      cmin = std::min(cmin, m.column_mass(j));
      cmax = std::max(cmax, m.column_mass(j));
    }
    const auto quarter = std::max<Eigen::Index>(0, sv.size() / 4 - 1);
    rep["assembled"] = {{"N", m.size()},
                        {"min_entry", m.min_entry()},
                        {"min_column_mass", cmin},
                        {"max_column_mass", cmax},
                        {"sigma_1", sv(0)},
                        {"sigma_N_over_4", sv(quarter)}};
  }
  out.write_json("spectrum.json", rep);
  if (!est.converged) {
    throw Error(ErrorKind::NoConvergence, "power iteration did not converge");
  }
  return kOk;
}

int cmd_mc(Context& ctx, Outputs& out, const std::string& rho_path, const std::string& solution) {
  const std::string path = !rho_path.empty() ? rho_path : (fs::path(solution) / "rho.csv").string();
  const DensityField rho = io::read_field_csv(path, ctx.grid);
  const double T = ctx.config.time.T;
  const double dt = *ctx.config.mc.dt;
  const std::uint64_t seed = *ctx.config.mc.seed;
  ParticleEnsemble ens = sample_initial(rho, ctx.config.mc.n_particles, seed);
  ens = simulate(ctx.model, ctx.grid, std::move(ens), T, dt);

  // histogram on the (possibly coarsened) bin grid
  std::vector<std::size_t> bins;
  for (int a = 0; a < ctx.grid.dim(); ++a) {
    const std::size_t n = ctx.grid.n_cells(a);
    const std::size_t b = ctx.config.mc.bins;
    bins.push_back(b >= 4 && b <= n && n % b == 0 ? b : n);
  }
  const DomainGrid bin_grid = make_grid(ctx.grid.dim(), ctx.config.domain.lo, ctx.config.domain.hi, bins);
  const MCEstimate est = estimate_density(ens, bin_grid);
  const DensityField pde = coarsen(Propagator(ctx.model, ctx.grid, ctx.solver, 0.0, T).advance(rho), bin_grid);
  const ConsistencyReport cons = compare_to_reference(est, pde, ctx.config.mc.z_bound);

  io::write_mc_csv(out / "mc.csv", est);
  out.add("mc.csv");
  std::string zcsv = "bin,z\n";
  for (std::size_t k = 0; k < cons.z.size(); ++k) {
    zcsv += std::to_string(k) + "," + io::format_double(cons.z[k]) + "\n";
  }
  io::write_text(out / "zscores.csv", zcsv);
  out.add("zscores.csv");
  const bool ok = cons.fraction_within >= ctx.config.mc.min_fraction;
  out.write_json("mc.json", {{"n", est.n_particles},
                             {"survival", est.survival},
                             {"dt", dt},
                             {"seed", seed},
                             {"T", T},
                             {"pde_survival", cons.pde_survival},
                             {"bins", bin_grid.size()},
                             {"z_bound", cons.bound},
                             {"fraction_within", cons.fraction_within},
                             {"consistent", ok}});
  return ok ? kOk : kMcInconsistent;
}

int cmd_verify(Context& ctx, Outputs& out, const std::string& solution) {
  const TargetProfile gamma = realize_gamma(build_gamma(ctx.config, ctx.grid), ctx.grid);
  const SeedSolution sol = io::read_seed_solution(solution, ctx.grid, gamma);
  const VerificationReport v =
      verify_seed(sol, ctx.model, ctx.grid, ctx.solver, build_seed_options(ctx.config));
  io::write_field_csv(out / "decrement.csv", v.decrement);
  out.add("decrement.csv");
  json rep = verification_json(v);
  rep["alpha"] = sol.alpha;
  out.write_json("verification.json", rep);
  return v.passed ? kOk : kVerificationFailed;
}

void report_error(std::ostream& err, const fs::path& dir, const std::string& kind, int code,
                  const std::string& message) {
  const json j = {{"error", kind}, {"exit_code", code}, {"message", message}};
  err << j.dump() << "\n";
  if (!dir.empty()) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!ec) io::write_text(dir / "error.json", j.dump(2) + "\n");
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Initial densities with a prescribed decrement for absorbed diffusions", "absorb"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::string rho_path, solution_dir, output_override;
  bool assemble = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--set", overrides, "override a config leaf, e.g. time.T=0.5");
    sub->add_option("-o,--output", output_override, "output directory (overrides config)");
  };
  auto* seed = app.add_subcommand("seed", "construct rho and alpha for the configured gamma");
  common(seed);
  auto* evolve_cmd = app.add_subcommand("evolve", "time-march an initial density");
  common(evolve_cmd);
  evolve_cmd->add_option("--rho", rho_path, "initial density CSV")->required();
  auto* spectrum = app.add_subcommand("spectrum", "spectral radius of the time-T map");
  common(spectrum);
  spectrum->add_flag("--assemble", assemble, "also assemble the dense matrix and its singular values");
  auto* mc = app.add_subcommand("mc", "Monte Carlo simulation of the absorbed SDE");
  common(mc);
  auto* mc_src = mc->add_option_group("source");
  mc_src->add_option("--rho", rho_path, "initial density CSV");
  mc_src->add_option("--solution", solution_dir, "seed solution directory (uses rho.csv)");
  mc_src->require_option(1);
  auto* verify_cmd = app.add_subcommand("verify", "re-check a seed solution directory");
  common(verify_cmd);
  verify_cmd->add_option("--solution", solution_dir, "seed solution directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    report_error(err, {}, "UsageError", kConfig, e.what());
    return kConfig;
  }

  fs::path out_dir;
  try {
    json doc;
    try {
      doc = json::parse(io::read_text(config_path));
    } catch (const json::exception& e) {
      config_error(config_path + ": " + e.what());
    }
    for (const auto& o : overrides) apply_override(doc, o);
    if (!output_override.empty()) doc["output"] = fs::absolute(output_override).string();
    const fs::path base = fs::absolute(config_path).parent_path();
    RunConfig config = parse_config(doc, base);
    out_dir = config.output;

    Context ctx = prepare(std::move(config));
    RunConfig& rc = ctx.config;
    if (!rc.mc.seed) rc.mc.seed = (std::uint64_t{std::random_device{}()} << 32) | std::random_device{}();
    if (!rc.mc.dt) rc.mc.dt = default_dt(ctx.model, ctx.grid, rc.time.T);

    Outputs outputs(out_dir);
    outputs.write_json("config.json", to_json(rc));

    int code = kOk;
    if (*seed) code = cmd_seed(ctx, outputs);
    else if (*evolve_cmd) code = cmd_evolve(ctx, outputs, rho_path);
    else if (*spectrum) code = cmd_spectrum(ctx, outputs, assemble);
    else if (*mc) code = cmd_mc(ctx, outputs, rho_path, solution_dir);
    else if (*verify_cmd) code = cmd_verify(ctx, outputs, solution_dir);
    outputs.finish();
    if (code != kOk) {
      report_error(err, out_dir, code == kVerificationFailed ? "VerificationFailed" : "McInconsistent",
                   code, "check failed; see the reports in " + out_dir.string());
    } else {
      out << "wrote " << out_dir.string() << "\n";
    }
    return code;
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    report_error(err, out_dir, to_string(e.kind()), code, e.what());
    return code;
  } catch (const std::exception& e) {
    report_error(err, out_dir, "InternalError", kInternal, e.what());
    return kInternal;
  }
}

}  // namespace absorb::cli
