#include "hcdd/topopt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "hcdd/io.hpp"
#include "hcdd/krylov.hpp"

namespace hcdd {

void ReusePolicy::validate() const {
  if (period < 1) throw std::invalid_argument("reuse period must be >= 1");
  if (threshold < 1) throw std::invalid_argument("reuse threshold must be >= 1");
}

bool ReusePolicy::should_rebuild(int age, int last_iterations) const {
  return age >= period || last_iterations > threshold;
}

CoefficientField simp_field(const Eigen::VectorXd& rho_phys, const SimpParams& simp) {
  CoefficientField c;
  c.nu = simp.nu;
  c.E_min = simp.E_min;
  c.E_max = simp.E_max;
  c.modulus.resize(static_cast<std::size_t>(rho_phys.size()));
  for (Eigen::Index e = 0; e < rho_phys.size(); ++e)
    c.modulus[e] = simp_modulus(std::clamp(rho_phys[e], 0.0, 1.0), simp.penal, simp.E_min, simp.E_max);  // filter rounding
  return c;
}

ComplianceSensitivity compliance_and_sensitivity(const FineMesh& mesh, const DofMap& dofs, const Eigen::VectorXd& u,
                                                 const Eigen::VectorXd& f, const Eigen::VectorXd& rho_phys,
                                                 const SimpParams& simp) {
  if (u.size() != dofs.num_free() || f.size() != u.size() || rho_phys.size() != mesh.num_elements())
    throw std::invalid_argument("sensitivity inputs have inconsistent sizes");
  ComplianceSensitivity out;
  out.compliance = f.dot(u);
  out.dc.resize(mesh.num_elements());
  const ElasticElementMatrix k0 = element_stiffness_elasticity(1.0, simp.nu, mesh.h);
  Eigen::Matrix<double, 8, 1> ue;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto nodes = mesh.element_nodes(e);
    for (int a = 0; a < 4; ++a)
      for (int c = 0; c < 2; ++c) {
        const int d = dofs.free_index(nodes[a], c);
        ue[2 * a + c] = d >= 0 ? u[d] : 0.0;
      }
    const double r = rho_phys[e];
    const double dE = simp.penal * std::pow(r, simp.penal - 1.0) * (simp.E_max - simp.E_min);
    out.dc[e] = -dE * ue.dot(k0 * ue);
  }
  return out;
}

Eigen::VectorXd oc_update(const Eigen::VectorXd& rho, const Eigen::VectorXd& dc, const Eigen::VectorXd& dv,
                          const Eigen::VectorXd& v, double target_volume, const DensityFilter& filter,
                          const OcParams& oc) {
  const Eigen::Index n = rho.size();
  if (dc.size() != n || dv.size() != n || v.size() != n) throw std::invalid_argument("OC inputs differ in size");
  if (!(target_volume > 0.0)) throw std::invalid_argument("target volume must be positive");

  Eigen::VectorXd next(n);
  auto update = [&](double lambda) {
    for (Eigen::Index e = 0; e < n; ++e) {
      const double lo = std::max(0.0, rho[e] - oc.move);
      const double hi = std::min(1.0, rho[e] + oc.move);
      double val = hi;
      if (lambda > 0.0) {
        const double B = std::max(0.0, -dc[e]) / (lambda * dv[e]);
        val = std::clamp(rho[e] * std::pow(B, oc.damping), lo, hi);
      }
      next[e] = val;
    }
    return v.dot(filter.apply(next)) - target_volume;
  };

  if (update(0.0) < 0.0) throw std::runtime_error("target volume is out of reach within the move limit");
  double l1 = 0.0, l2 = 1.0;
  for (int k = 0; update(l2) > 0.0; ++k) {
    if (k == 64) throw std::runtime_error("OC bisection failed to bracket the multiplier");
    l1 = l2;
    l2 *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (l1 + l2);
    const double g = update(mid);
    if (std::abs(g) <= 1e-12 * target_volume) return next;
    (g > 0.0 ? l1 : l2) = mid;
    if (l2 - l1 <= 1e-15 * l2) break;
  }
  // Upper end satisfies the constraint from below; pick the closer side.
  const double g1 = update(l1);
  const Eigen::VectorXd a = next;
  const double g2 = update(l2);
  return std::abs(g1) < std::abs(g2) ? a : next;
}

void OptimizeConfig::validate() const {
  if (nx < 2 || ny < 2 || Nx < 2 || Ny < 2 || nx % Nx || ny % Ny)
    throw std::invalid_argument("invalid mesh or coarse grid");
  if (!(volume_fraction > 0.0 && volume_fraction < 1.0)) throw std::invalid_argument("volume fraction must lie in (0, 1)");
  if (!(filter_radius > 0.0)) throw std::invalid_argument("filter radius must be positive");
  if (iterations < 0) throw std::invalid_argument("iteration count must be >= 0");
  if (!(simp.penal >= 1.0) || !(simp.E_min > 0.0) || !(simp.E_max > simp.E_min))
    throw std::invalid_argument("invalid SIMP parameters");
  if (!(oc.move > 0.0) || !(oc.damping > 0.0)) throw std::invalid_argument("invalid OC parameters");
  reuse.validate();
  if (snapshot_every < 0) throw std::invalid_argument("snapshot interval must be >= 0");
}

std::vector<int> cantilever_dirichlet(const FineMesh& mesh) {
  std::vector<int> d;
  for (int c = 0; c < 2; ++c)
    for (int j = 0; j <= mesh.ny; ++j) d.push_back(c * mesh.num_nodes() + mesh.node(0, j));
  std::sort(d.begin(), d.end());
  return d;
}

LoadSpec cantilever_load(const FineMesh& mesh, double F) {
  LoadSpec load;
  load.point_loads.push_back({mesh.node(mesh.nx, mesh.ny / 2), 1, -F});
  return load;
}

OptimizeResult optimize(const OptimizeConfig& cfg) {
  cfg.validate();
  const FineMesh mesh = build_fine_mesh(cfg.nx, cfg.ny);
  const auto part = build_coarse_partition(mesh, cfg.Nx, cfg.Ny);
  const auto pou = build_partition_of_unity(part);
  const DensityFilter filter(mesh, cfg.filter_radius * mesh.h);
  const auto dirichlet = cantilever_dirichlet(mesh);
  const int ne = mesh.num_elements();

  const Eigen::VectorXd v = Eigen::VectorXd::Constant(ne, mesh.h * mesh.h);
  const double target = cfg.volume_fraction * v.sum();
  const Eigen::VectorXd dv = filter.apply_transpose(v);

  OptimizeResult res;
  res.rho = Eigen::VectorXd::Constant(ne, target / v.sum());
  if (!cfg.output_dir.empty()) std::filesystem::create_directories(cfg.output_dir);

  std::optional<TwoLevelPreconditioner> pc;
  int age = 0;
  int last_iters = 0;
  ReusePolicy policy = cfg.reuse;
  const PcgOptions pcg{cfg.tol, cfg.maxit, false, false};

  for (int it = 0; it < cfg.iterations; ++it) {
    IterationLog entry;
    entry.iteration = it;
    res.rho_phys = filter.apply(res.rho);
    const auto coeff = simp_field(res.rho_phys, cfg.simp);
    const auto K = assemble_elasticity(mesh, coeff, dirichlet);
    const Eigen::VectorXd f = assemble_load(mesh, cantilever_load(mesh, cfg.force), K.dofs);

    Eigen::VectorXd u;
    auto rebuild = [&] {
      pc.emplace(build_preconditioner(cfg.variant, K, part, pou, coeff, cfg.eig));
      age = 0;
      ++res.rebuilds;
      entry.rebuilt = true;
      entry.coarse_time += pc->build_times().coarse;
      entry.level1_time += pc->build_times().level1;
    };
    if (cfg.direct) {
      u = solve_direct(K.matrix, f);
    } else {
      if (!pc || policy.should_rebuild(age, last_iters)) rebuild();
      auto sol = pcg_solve(K.matrix, f, *pc, pcg);
      if (!sol.report.converged) {
        std::clog << "warning: state solve did not converge at step " << it << ", rebuilding\n";
        rebuild();
        entry.retried = true;
        sol = pcg_solve(K.matrix, f, *pc, pcg);
        if (!sol.report.converged) throw std::runtime_error("state solve failed after a preconditioner rebuild");
      }
      u = std::move(sol.x);
      last_iters = sol.report.iterations;
      entry.pcg_iterations = last_iters;
      entry.condition = sol.report.condition;
      ++age;
      if (it == 0 && cfg.relative_threshold > 0.0)
        policy.threshold = std::max(1, static_cast<int>(std::ceil(cfg.relative_threshold * last_iters)));
      if (cfg.verify_direct) {
        const Eigen::VectorXd ud = solve_direct(K.matrix, f);
        entry.direct_error = (u - ud).norm() / ud.norm();
      }
    }
    res.total_coarse_time += entry.coarse_time;

    const auto cs = compliance_and_sensitivity(mesh, K.dofs, u, f, res.rho_phys, cfg.simp);
    entry.compliance = cs.compliance;
    res.rho = oc_update(res.rho, filter.apply_transpose(cs.dc), dv, v, target, filter, cfg.oc);
    entry.volume = v.dot(filter.apply(res.rho));
    entry.volume_error = std::abs(entry.volume - target) / target;
    res.log.push_back(entry);

    if (cfg.snapshot_every > 0 && !cfg.output_dir.empty() && (it + 1) % cfg.snapshot_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "density_%04d.pgm", it + 1);
      const Eigen::VectorXd shown = filter.apply(res.rho);
      export_field_image(mesh, std::span<const double>(shown.data(), shown.size()), cfg.output_dir / name);
    }
  }
  res.rho_phys = filter.apply(res.rho);
  if (!cfg.output_dir.empty()) {
    std::ofstream log(cfg.output_dir / "optimization_log.csv", std::ios::binary);
    write_optimization_log_csv(res.log, log);
    export_field_image(mesh, std::span<const double>(res.rho_phys.data(), res.rho_phys.size()),
                       cfg.output_dir / "density_final.pgm");
  }
  return res;
}

void write_optimization_log_csv(const std::vector<IterationLog>& log, std::ostream& out) {
  write_csv_row(out, {"iter", "g0", "volume", "volume_error", "pcg_iterations", "rebuilt", "retried", "condition",
                      "coarse_time_s"});
  for (const auto& e : log)
    write_csv_row(out, {std::to_string(e.iteration), format_double(e.compliance), format_double(e.volume),
                        format_double(e.volume_error), std::to_string(e.pcg_iterations), e.rebuilt ? "1" : "0",
                        e.retried ? "1" : "0", e.condition ? format_double(*e.condition) : "",
                        format_double(e.coarse_time)});
}

}  // namespace hcdd
