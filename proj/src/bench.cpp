#include "hcdd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <thread>

#include "hcdd/io.hpp"

namespace hcdd {

namespace {

struct FracRect {
  double x0, x1, y0, y1;
};

// Frozen geometry, fractions of the unit square.
constexpr FracRect kChannels[] = {
    {0.05, 0.95, 0.30, 0.32},
    {0.05, 0.95, 0.64, 0.66},
    {0.46, 0.48, 0.36, 0.60},
};
constexpr Point kInclusionSites[] = {{0.15, 0.15}, {0.85, 0.15}, {0.15, 0.85}, {0.85, 0.85},
                                     {0.25, 0.55}, {0.75, 0.45}, {0.55, 0.85}};

int to_index(double frac, int n) { return static_cast<int>(std::lround(frac * n)); }

ElementRect rasterize(const FracRect& r, const FineMesh& mesh) {
  ElementRect e;
  e.i0 = std::clamp(to_index(r.x0, mesh.nx), 0, mesh.nx - 1);
  e.i1 = std::clamp(to_index(r.x1, mesh.nx), e.i0 + 1, mesh.nx);
  e.j0 = std::clamp(to_index(r.y0, mesh.ny), 0, mesh.ny - 1);
  e.j1 = std::clamp(to_index(r.y1, mesh.ny), e.j0 + 1, mesh.ny);
  return e;
}

// Middle of one block along one axis, never touching the block boundary when b >= 3.
std::pair<int, int> block_core(int block, int b) {
  const int start = block * b;
  if (b < 3) return {start + b / 2, start + b / 2 + 1};
  const int lo = std::max(1, (3 * b) / 10);
  const int hi = std::min(b - 1, std::max(lo + 1, (7 * b + 9) / 10));
  return {start + lo, start + hi};
}

}  // namespace

SyntheticLayout synthetic_layout(std::string_view tag, const FineMesh& mesh, int Nx, int Ny) {
  if (tag != "channels-and-inclusions" && tag != "inclusions-only" && tag != "homogeneous")
    throw std::invalid_argument("unknown layout '" + std::string(tag) + "'");
  if (Nx < 1 || Ny < 1 || mesh.nx % Nx != 0 || mesh.ny % Ny != 0)
    throw std::invalid_argument("coarse grid must divide the fine mesh");
  SyntheticLayout out;
  out.tag = std::string(tag);
  if (tag == "homogeneous") return out;
  if (tag == "channels-and-inclusions")
    for (const auto& c : kChannels) out.channels.push_back(rasterize(c, mesh));
  const int bx = mesh.nx / Nx;
  const int by = mesh.ny / Ny;
  for (const auto& p : kInclusionSites) {
    const int I = std::clamp(static_cast<int>(p.x * Nx), 0, Nx - 1);
    const int J = std::clamp(static_cast<int>(p.y * Ny), 0, Ny - 1);
    const auto [i0, i1] = block_core(I, bx);
    const auto [j0, j1] = block_core(J, by);
    out.inclusions.push_back({i0, i1, j0, j1});
  }
  return out;
}

CoefficientField generate_coefficient(std::string_view tag, const FineMesh& mesh, double contrast, int Nx, int Ny,
                                      double nu) {
  if (!(contrast >= 1.0) || !std::isfinite(contrast)) throw std::invalid_argument("contrast must be >= 1");
  const auto layout = synthetic_layout(tag, mesh, Nx, Ny);
  CoefficientField c;
  c.nu = nu;
  c.E_max = 1.0;
  if (tag == "homogeneous") {
    c.E_min = 1.0;
    c.modulus.assign(static_cast<std::size_t>(mesh.num_elements()), 1.0);
    return c;
  }
  c.E_min = 1.0 / contrast;
  c.modulus.assign(static_cast<std::size_t>(mesh.num_elements()), c.E_min);
  for (int j = 0; j < mesh.ny; ++j)
    for (int i = 0; i < mesh.nx; ++i) {
      bool solid = false;
      for (const auto& r : layout.channels) solid = solid || r.contains(i, j);
      for (const auto& r : layout.inclusions) solid = solid || r.contains(i, j);
      if (solid) c.modulus[mesh.element(i, j)] = c.E_max;
    }
  return c;
}

int nearest_solid_element(const FineMesh& mesh, const CoefficientField& coeff, Point p) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int j = 1; j + 1 < mesh.ny; ++j)
    for (int i = 1; i + 1 < mesh.nx; ++i) {
      const int e = mesh.element(i, j);
      if (coeff.modulus[e] != coeff.E_max) continue;
      const Point c = mesh.element_centroid(e);
      const double d = (c.x - p.x) * (c.x - p.x) + (c.y - p.y) * (c.y - p.y);
      if (d < best_d) {
        best_d = d;
        best = e;
      }
    }
  if (best < 0) throw std::invalid_argument("no interior solid element to carry the load");
  return best;
}

LoadSpec opposing_forces(const FineMesh& mesh, const CoefficientField& coeff, double F) {
  LoadSpec load;
  load.add_element_force(mesh, nearest_solid_element(mesh, coeff, {0.2, 0.2}), F, 0.0);
  load.add_element_force(mesh, nearest_solid_element(mesh, coeff, {0.8, 0.8}), -F, 0.0);
  return load;
}

void BenchmarkConfig::validate() const {
  if (nx < 1 || ny < 1 || Nx < 1 || Ny < 1) throw std::invalid_argument("mesh sizes must be positive");
  if (nx % Nx != 0 || ny % Ny != 0) throw std::invalid_argument("coarse grid must divide the fine mesh");
  if (Nx < 2 || Ny < 2) throw std::invalid_argument("coarse grid needs an interior node");
  if (contrasts.empty()) throw std::invalid_argument("no contrast values");
  for (double c : contrasts)
    if (!(c >= 1.0)) throw std::invalid_argument("contrast values must be >= 1");
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("tolerance must lie in (0, 1)");
  if (maxit < 1) throw std::invalid_argument("maxit must be positive");
  if (eig.n_max < 1) throw std::invalid_argument("n_max must be positive");
  if (jobs < 1) throw std::invalid_argument("jobs must be positive");
}

BenchmarkProblem make_problem(const FineMesh& mesh, int Nx, int Ny, CoefficientField coeff, const LoadSpec& load) {
  coeff.validate(mesh.num_elements());
  BenchmarkProblem p{mesh, build_coarse_partition(mesh, Nx, Ny), {}, std::move(coeff), {}, {}};
  p.pou = build_partition_of_unity(p.part);
  p.K = assemble_elasticity(mesh, p.coeff, boundary_dirichlet(mesh, 2));
  p.f = assemble_load(mesh, load, p.K.dofs);
  return p;
}

BenchmarkProblem make_benchmark_problem(const BenchmarkConfig& cfg, double contrast) {
  const FineMesh mesh = build_fine_mesh(cfg.nx, cfg.ny);
  auto coeff = generate_coefficient(cfg.layout, mesh, contrast, cfg.Nx, cfg.Ny, cfg.nu);
  const auto load = opposing_forces(mesh, coeff, cfg.force);
  return make_problem(mesh, cfg.Nx, cfg.Ny, std::move(coeff), load);
}

namespace {

std::string describe_selection(const TwoLevelPreconditioner& pc) {
  const auto& m = pc.modes_per_node();
  if (m.empty()) return "";
  const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
  std::string s(to_string(pc.selection_rule()));
  s += ':' + std::to_string(*lo);
  if (*hi != *lo) s += '-' + std::to_string(*hi);
  return s;
}

}  // namespace

CaseResult solve_case(const BenchmarkProblem& prob, Variant variant, const BenchmarkConfig& cfg,
                      const Eigen::VectorXd* direct) {
  CaseResult res;
  res.variant = variant;
  res.contrast = prob.coeff.contrast();
  const PcgOptions opts{cfg.tol, cfg.maxit, false, false};
  PcgResult sol;
  if (variant == Variant::none) {
    sol = pcg_solve(prob.K.matrix, prob.f, IdentityPreconditioner{}, opts);
  } else {
    const auto pc = build_preconditioner(variant, prob.K, prob.part, prob.pou, prob.coeff, cfg.eig);
    const int used = pc.coarse_basis() ? pc.coarse_basis()->dim() : 0;
    if (used != pc.coarse_dim()) throw std::logic_error("coarse dimension bookkeeping mismatch");
    sol = pcg_solve(prob.K.matrix, prob.f, pc, opts);
    res.selection = describe_selection(pc);
    res.times = pc.build_times();
  }
  res.coarse_dim = sol.report.coarse_dim;
  res.times.solve = sol.report.times.solve;
  if (direct && sol.report.converged) res.direct_error = (sol.x - *direct).norm() / direct->norm();
  res.report = std::move(sol.report);
  return res;
}

std::vector<CaseResult> run_benchmark(const BenchmarkConfig& cfg) {
  cfg.validate();
  std::vector<Variant> variants;
  if (cfg.include_none) variants.push_back(Variant::none);
  for (Variant v : cfg.variants)
    if (v != Variant::none) variants.push_back(v);

  std::vector<BenchmarkProblem> problems;
  std::vector<Eigen::VectorXd> directs;
  for (double eta : cfg.contrasts) {
    problems.push_back(make_benchmark_problem(cfg, eta));
    if (cfg.check_direct) directs.push_back(solve_direct(problems.back().K.matrix, problems.back().f));
  }

  const std::size_t nv = variants.size();
  const std::size_t cells = cfg.contrasts.size() * nv;
  std::vector<CaseResult> results(cells);
  std::vector<std::string> errors(cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < cells; c = next++) {
      const std::size_t ic = c / nv;
      try {
        results[c] = solve_case(problems[ic], variants[c % nv], cfg, cfg.check_direct ? &directs[ic] : nullptr);
      } catch (const std::exception& e) {
        errors[c] = e.what();
      }
    }
  };
  if (cfg.jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < cfg.jobs; ++t) pool.emplace_back(worker);
  }
  for (std::size_t c = 0; c < cells; ++c)
    if (!errors[c].empty())
      throw std::runtime_error(std::string(to_string(variants[c % nv])) + " at contrast " +
                               format_contrast(cfg.contrasts[c / nv]) + ": " + errors[c]);

  if (!cfg.output_dir.empty()) write_benchmark_tables(cfg, results);
  return results;
}

std::string format_contrast(double eta) {
  if (eta > 0.0) {
    const double e = std::round(std::log10(eta));
    if (std::pow(10.0, e) == eta) return e == 0.0 ? "1" : "1e" + std::to_string(static_cast<int>(e));
  }
  return format_double(eta);
}

std::string format_iterations(const CaseResult& r, int maxit) {
  return r.report.converged ? std::to_string(r.report.iterations) : ">" + std::to_string(maxit);
}

std::string format_condition(const std::optional<double>& c) {
  if (!c) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", *c);
  return buf;
}

void write_benchmark_tables(const BenchmarkConfig& cfg, const std::vector<CaseResult>& results) {
  std::filesystem::create_directories(cfg.output_dir);
  const std::size_t nc = cfg.contrasts.size();
  if (nc == 0 || results.size() % nc != 0) throw std::invalid_argument("results do not match the configuration");
  const std::size_t nv = results.size() / nc;

  std::vector<CsvRow> timings;
  for (std::size_t ic = 0; ic < nc; ++ic) {
    std::vector<CsvRow> rows;
    for (std::size_t iv = 0; iv < nv; ++iv) {
      const auto& r = results[ic * nv + iv];
      rows.push_back({std::string(to_string(r.variant)), format_iterations(r, cfg.maxit),
                      format_condition(r.report.condition), std::to_string(r.coarse_dim), r.selection});
      timings.push_back({std::string(to_string(r.variant)), format_contrast(r.contrast),
                         format_double(r.times.level1), format_double(r.times.coarse), format_double(r.times.solve)});
    }
    write_csv(cfg.output_dir / ("table_eta_" + format_contrast(cfg.contrasts[ic]) + ".csv"),
              {"Preconditioner", "Iterations", "Condition", "Coarse dim", "Selection"}, rows);
  }

  CsvRow header{"Preconditioner"};
  for (double eta : cfg.contrasts) header.push_back("eta=" + format_contrast(eta));
  std::vector<CsvRow> iters, conds;
  for (std::size_t iv = 0; iv < nv; ++iv) {
    CsvRow a{std::string(to_string(results[iv].variant))};
    CsvRow b = a;
    for (std::size_t ic = 0; ic < nc; ++ic) {
      const auto& r = results[ic * nv + iv];
      a.push_back(format_iterations(r, cfg.maxit));
      b.push_back(format_condition(r.report.condition));
    }
    iters.push_back(std::move(a));
    conds.push_back(std::move(b));
  }
  write_csv(cfg.output_dir / "summary_iterations.csv", header, iters);
  write_csv(cfg.output_dir / "summary_condition.csv", header, conds);
  // Wall-clock columns, excluded from the byte-identical outputs above.
  write_csv(cfg.output_dir / "timings.csv", {"Preconditioner", "Contrast", "Level1 s", "Coarse s", "Solve s"},
            timings);
}

}  // namespace hcdd
