// Acceptance run: one PASS/FAIL line per criterion, exit code 1 if any fails.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hcdd/bench.hpp"
#include "hcdd/coarse.hpp"
#include "hcdd/krylov.hpp"
#include "hcdd/schwarz.hpp"
#include "hcdd/spectral.hpp"
#include "hcdd/topopt.hpp"

using namespace hcdd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const std::function<Outcome()>& run) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double t = seconds_since(t0);
  std::printf("criterion %2d: %s  %s  [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), t);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

// Shared 100x100 / 10x10 sweep for criteria 1, 2, 8 and 11.
struct Sweep {
  std::vector<CaseResult> results;
  double wall = 0.0;

  const CaseResult& at(Variant v, double eta) const {
    for (const auto& r : results)
      if (r.variant == v && r.contrast == eta) return r;
    throw std::runtime_error("missing benchmark cell");
  }
};

Sweep run_sweep() {
  BenchmarkConfig cfg;
  cfg.check_direct = true;
  const auto t0 = Clock::now();
  Sweep s;
  s.results = run_benchmark(cfg);
  s.wall = seconds_since(t0);
  std::printf("sweep: %zu cells in %.1f s\n", s.results.size(), s.wall);
  std::printf("  %-12s", "variant");
  for (double eta : cfg.contrasts) std::printf(" %14s", ("eta=" + format_contrast(eta)).c_str());
  std::printf("\n");
  std::vector<Variant> rows{Variant::none};
  rows.insert(rows.end(), cfg.variants.begin(), cfg.variants.end());
  for (Variant v : rows) {
    std::printf("  %-12s", std::string(to_string(v)).c_str());
    for (double eta : cfg.contrasts) {
      const auto& r = s.at(v, eta);
      const std::string cell = format_iterations(r, cfg.maxit) + "/" + format_condition(r.report.condition);
      std::printf(" %14s", cell.c_str());
    }
    std::printf("\n");
  }
  return s;
}

Outcome contrast_robustness(const Sweep& s) {
  std::ostringstream os;
  bool ok = true;
  for (Variant v : {Variant::EE, Variant::EH_Rot, Variant::EE_Rand, Variant::EH_Rot_Rand}) {
    const auto& lo = s.at(v, 1.0);
    const auto& hi = s.at(v, 1e6);
    int worst = 0;
    bool conv = true;
    for (double eta : {1.0, 1e2, 1e4, 1e6}) {
      worst = std::max(worst, s.at(v, eta).report.iterations);
      conv = conv && s.at(v, eta).report.converged;
    }
    const bool row = conv && hi.report.iterations <= 5 * lo.report.iterations && worst <= 150;
    ok = ok && row;
    os << to_string(v) << " " << lo.report.iterations << "->" << hi.report.iterations << "; ";
  }
  for (double eta : {1e4, 1e6}) {
    const auto& r = s.at(Variant::none, eta);
    const bool over = !r.report.converged;
    ok = ok && over;
    os << "None@" << format_contrast(eta) << (over ? " >2000" : " converged") << "; ";
  }
  ok = ok && s.wall <= 300.0;
  os << "sweep " << static_cast<int>(s.wall) << " s";
  return {ok, os.str()};
}

Outcome non_robust_control(const Sweep& s) {
  const auto hh = s.at(Variant::HH, 1e4).report.condition;
  const auto ehr = s.at(Variant::EH_Rot, 1e4).report.condition;
  if (!hh || !ehr) return {false, "missing condition estimate"};
  std::ostringstream os;
  os << "kappa(HH)=" << *hh << " kappa(EH+Rot)=" << *ehr << " ratio=" << *hh / *ehr;
  return {*hh >= 5.0 * *ehr, os.str()};
}

Outcome direct_agreement(const Sweep& s) {
  double worst = 0.0;
  int checked = 0;
  for (const auto& r : s.results) {
    if (!r.report.converged) continue;
    if (!r.direct_error) return {false, "direct error not recorded"};
    worst = std::max(worst, *r.direct_error);
    ++checked;
  }
  std::ostringstream os;
  os << checked << " converged solves, max relative error " << worst;
  return {worst <= 1e-5, os.str()};
}

Outcome build_cost_ordering(const Sweep& s) {
  std::map<Variant, double> t;
  for (const auto& r : s.results) t[r.variant] += r.times.coarse;
  std::ostringstream os;
  for (Variant v : {Variant::HH, Variant::HH_Rot, Variant::EH, Variant::EH_Rot, Variant::EH_Rot_Rand, Variant::EE,
                    Variant::EE_Rand})
    os << to_string(v) << "=" << t[v] << " ";
  // Heat versus elasticity eigenproblems at matched eigensolver, then
  // randomized versus dense within each eigenproblem kind.
  bool ok = true;
  for (Variant v : {Variant::HH, Variant::HH_Rot, Variant::EH, Variant::EH_Rot}) ok = ok && t[v] < t[Variant::EE];
  ok = ok && t[Variant::EH_Rot_Rand] < t[Variant::EE_Rand];
  ok = ok && t[Variant::EE_Rand] < t[Variant::EE];
  ok = ok && t[Variant::EH_Rot_Rand] < t[Variant::EH_Rot];
  return {ok, os.str() + "(seconds summed over contrasts)"};
}

Outcome displacement_splitting() {
  std::ostringstream os;
  bool ok = true;
  for (double nu : {0.3, 0.0}) {
    const auto mesh = build_fine_mesh(32, 32);
    const auto K = assemble_elasticity(mesh, homogeneous_field(mesh, 1.0, nu), boundary_dirichlet(mesh, 2));
    const BlockDiagonalPreconditioner M(K.matrix, K.dofs.first_block_size());
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Eigen::VectorXd b(K.dimension());
    for (auto& x : b) x = d(rng);
    PcgOptions opt;
    opt.tol = 1e-12;
    const auto res = pcg_solve(K.matrix, b, M, opt);
    const double kappa = res.report.condition.value_or(INFINITY);
    const double bound = block_split_condition_bound(nu);
    ok = ok && res.report.converged && kappa <= 1.15 * bound;
    os << "nu=" << nu << " kappa=" << kappa << " bound=" << bound << "; ";
  }
  return {ok, os.str()};
}

Outcome block_identity() {
  const auto mesh = build_fine_mesh(20, 20);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(-6.0, 0.0);
  double worst = 0.0;
  bool all_equal = true;
  for (int draw = 0; draw < 3; ++draw) {
    CoefficientField c = homogeneous_field(mesh, 1.0, 0.3);
    c.E_min = 1e-6;
    for (auto& E : c.modulus) E = std::pow(10.0, d(rng));
    const auto K = assemble_elasticity(mesh, c, boundary_dirichlet(mesh, 2));
    const int nxb = K.dofs.first_block_size();
    const Eigen::MatrixXd A(K.matrix);
    const Eigen::MatrixXd kxx = A.topLeftCorner(nxb, nxb);
    const Eigen::MatrixXd kyy = A.bottomRightCorner(A.rows() - nxb, A.cols() - nxb);
    if (kxx.rows() != kyy.rows()) return {false, "x and y blocks differ in size"};
    const double diff = (kxx - kyy).cwiseAbs().maxCoeff() / kxx.cwiseAbs().maxCoeff();
    worst = std::max(worst, diff);
    all_equal = all_equal && (kxx.array() == kyy.array()).all();
  }
  std::ostringstream os;
  os << "max |K_xx - K_yy| / max |K_xx| = " << worst << " over 3 draws";
  return {all_equal, os.str()};
}

Outcome eigensolver_oracle() {
  const auto mesh = build_fine_mesh(100, 100);
  const auto part = build_coarse_partition(mesh, 10, 10);
  const auto dofs = make_dof_map(mesh, 2, boundary_dirichlet(mesh, 2));
  const int k = 6;
  double worst_rel = 0.0, worst_below = 0.0;
  int patches = 0;
  std::ostringstream os;
  for (double eta : {1.0, 1e4}) {
    const auto c = generate_coefficient("channels-and-inclusions", mesh, eta);
    for (auto kind : {ProblemKind::elasticity, ProblemKind::diffusion}) {
      for (int l = 0; l < static_cast<int>(part.neighborhoods.size()); l += 4) {
        const auto p = build_local_problem(part, l, kind, c.modulus, c.nu, dofs);
        const auto dense = solve_local_eig_dense(p, k + 1);
        const double scale = dense.eigenvalues.head(k + 1).cwiseAbs().maxCoeff();
        for (int snaps : {10, 15}) {
          const auto r = solve_local_eig_randomized(p, k, {snaps, 0, 2});
          if (r.available() < k) return {false, "randomized solver returned too few pairs"};
          for (int i = 0; i < k; ++i) {
            const double ld = dense.eigenvalues[i], lr = r.eigenvalues[i];
            worst_below = std::max(worst_below, (ld - lr) / scale);
            if (ld > kKernelTolerance * scale)
              worst_rel = std::max(worst_rel, std::abs(lr - ld) / ld);
            else
              worst_rel = std::max(worst_rel, std::abs(lr) > 1e-9 * scale ? 1.0 : 0.0);
          }
        }
        ++patches;
      }
    }
  }
  os << patches << " patch solves (both kinds, eta 1 and 1e4, 10 and 15 snapshots): max relative error "
     << worst_rel << ", max shortfall below dense " << worst_below << " (scaled)";
  return {patches >= 20 && worst_rel <= 0.05 && worst_below <= 1e-9, os.str()};
}

Outcome rbm_capture() {
  const auto mesh = build_fine_mesh(12, 12);
  const auto part = build_coarse_partition(mesh, 3, 3);
  const auto pou = build_partition_of_unity(part);
  const auto coeff = homogeneous_field(mesh, 1.0, 0.3);
  const auto K = assemble_elasticity(mesh, coeff, std::vector<int>{});
  const auto& d = K.dofs;
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(d.num_free(), 3);
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    const Point p = mesh.node_coord(n);
    R(d.free_index(n, 0), 0) = 1.0;
    R(d.free_index(n, 1), 1) = 1.0;
    R(d.free_index(n, 0), 2) = -(p.y - 0.5);
    R(d.free_index(n, 1), 2) = p.x - 0.5;
  }
  EigOptions o;
  o.rule = SelectionRule::fixed;
  o.n_max = 6;
  const auto se = compute_local_spectra(ProblemKind::elasticity, Eigensolver::dense, part, coeff, d, o);
  const auto E = build_coarse_basis_elasticity(part, pou, d, se.problems, se.selections);
  o.n_max = 3;
  const auto sh = compute_local_spectra(ProblemKind::diffusion, Eigensolver::dense, part, coeff, d, o);
  const auto H = build_coarse_basis_heat(part, pou, d, sh.problems, sh.selections);
  const auto HR = enrich_rotations(H, part, pou, d);

  auto worst = [&](const CoarseBasis& b, int cols) {
    double w = 0.0;
    for (int c = 0; c < cols; ++c) w = std::max(w, coarse_projection_residual(b, R.col(c)));
    return w;
  };
  const double e = worst(E, 3), hr = worst(HR, 3), h_trans = worst(H, 2);
  const double h_rot = coarse_projection_residual(H, R.col(2));
  std::ostringstream os;
  os << "E " << e << ", H+Rot " << hr << ", H translations " << h_trans << ", H rotation " << h_rot;
  return {e <= 1e-8 && hr <= 1e-8 && h_trans <= 1e-8 && h_rot > 1e-8, os.str()};
}

Outcome disconnected_modes() {
  const auto mesh = build_fine_mesh(14, 14);
  const auto part = build_coarse_partition(mesh, 2, 2);
  CoefficientField c = homogeneous_field(mesh, 1.0, 0.3);
  c.E_min = 1e-6;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const int i = mesh.element_i(e), j = mesh.element_j(e);
    const bool a = i >= 2 && i < 6 && j >= 2 && j < 6;
    const bool b = i >= 8 && i < 12 && j >= 8 && j < 12;
    if (!(a || b)) c.modulus[e] = c.E_min;
  }
  const auto dofs = make_dof_map(mesh, 2, std::vector<int>{});
  const auto pe = build_local_problem(part, 0, ProblemKind::elasticity, c.modulus, c.nu, dofs);
  const auto se = solve_local_eig_dense(pe, 7);
  int below = 0;
  for (int i = 0; i < 7; ++i) below += se.eigenvalues[i] < 1e-3 * se.eigenvalues[6] ? 1 : 0;
  const auto pd = build_local_problem(part, 0, ProblemKind::diffusion, c.modulus, c.nu, dofs);
  const auto sd = select_modes(solve_local_eig_dense(pd, 7), 6, SelectionRule::gap);
  std::ostringstream os;
  os << below << " elasticity eigenvalues below 1e-3 lambda_7 (lambda_6=" << se.eigenvalues[5]
     << ", lambda_7=" << se.eigenvalues[6] << "); heat gap rule selects " << sd.n_sel;
  return {below == 6 && sd.n_sel == 2, os.str()};
}

Outcome sensitivity_check() {
  const auto mesh = build_fine_mesh(10, 10);
  const DensityFilter F(mesh, 1.5 * mesh.h);
  const SimpParams simp;
  const auto dirichlet = cantilever_dirichlet(mesh);
  auto solve = [&](const Eigen::VectorXd& rho, Eigen::VectorXd* dc) {
    const Eigen::VectorXd rf = F.apply(rho);
    const auto K = assemble_elasticity(mesh, simp_field(rf, simp), dirichlet);
    const Eigen::VectorXd f = assemble_load(mesh, cantilever_load(mesh, 1.0), K.dofs);
    const Eigen::VectorXd u = solve_direct(K.matrix, f);
    const auto cs = compliance_and_sensitivity(mesh, K.dofs, u, f, rf, simp);
    if (dc) *dc = F.apply_transpose(cs.dc);
    return cs.compliance;
  };
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(0.2, 0.8);
  Eigen::VectorXd rho(mesh.num_elements());
  for (auto& x : rho) x = d(rng);
  Eigen::VectorXd grad;
  solve(rho, &grad);
  const double delta = 1e-6;
  double worst = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    Eigen::VectorXd p = rho, m = rho;
    p[e] += delta;
    m[e] -= delta;
    const double fd = (solve(p, nullptr) - solve(m, nullptr)) / (2 * delta);
    worst = std::max(worst, std::abs(fd - grad[e]) / std::abs(grad[e]));
  }
  std::ostringstream os;
  os << "max elementwise relative error " << worst << " over " << mesh.num_elements() << " elements";
  return {worst <= 1e-4, os.str()};
}

Outcome optimization_smoke() {
  OptimizeConfig base;
  base.nx = base.ny = 60;
  base.Nx = base.Ny = 3;
  base.iterations = 100;
  base.eig.n_max = 6;
  base.relative_threshold = 3.0;

  auto run = [&](int period) {
    auto cfg = base;
    cfg.reuse.period = period;
    return optimize(cfg);
  };
  const auto every = run(1);
  const auto reuse = run(10);

  std::ostringstream os;
  bool ok = true;
  for (const auto* r : {&every, &reuse}) {
    double vmax = 0.0;
    for (const auto& e : r->log) vmax = std::max(vmax, e.volume_error);
    const double c0 = r->log.front().compliance, c1 = r->log.back().compliance;
    ok = ok && vmax <= 1e-6 && c1 < c0 && r->log.size() == 100u;
    os << (r == &every ? "s=1" : "s=10") << ": compliance " << c0 << "->" << c1 << ", max volume error " << vmax
       << ", coarse time " << r->total_coarse_time << " s, rebuilds " << r->rebuilds << "; ";
  }
  const double rel = std::abs(reuse.log.back().compliance - every.log.back().compliance) / every.log.back().compliance;
  ok = ok && reuse.total_coarse_time < every.total_coarse_time && rel <= 0.01;
  os << "final compliance difference " << rel;
  return {ok, os.str()};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const Sweep sweep = run_sweep();
  report(1, [&] { return contrast_robustness(sweep); });
  report(2, [&] { return non_robust_control(sweep); });
  report(3, displacement_splitting);
  report(4, block_identity);
  report(5, eigensolver_oracle);
  report(6, rbm_capture);
  report(7, disconnected_modes);
  report(8, [&] { return direct_agreement(sweep); });
  report(9, sensitivity_check);
  report(10, optimization_smoke);
  report(11, [&] { return build_cost_ordering(sweep); });
  std::printf("%d of 11 criteria failed, total %.1f s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
