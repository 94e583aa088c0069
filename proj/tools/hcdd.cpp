#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hcdd/bench.hpp"
#include "hcdd/io.hpp"
#include "hcdd/topopt.hpp"

using namespace hcdd;

namespace {

struct EigFlags {
  int n_max = 6;
  std::string rule;  // empty: per-problem default
  int snapshots = 10;
  std::uint64_t seed = 0;
  int power_steps = 2;
  std::string weight = "modulus";

  void add(CLI::App* app) {
    app->add_option("--nmax", n_max, "Eigenvectors per coarse node (upper bound for the gap rule)")->capture_default_str();
    app->add_option("--selection", rule, "fixed | gap (default: fixed for elasticity, gap for diffusion)")
        ->check(CLI::IsMember({"fixed", "gap"}));
    app->add_option("--snapshots", snapshots, "Random forcings per neighborhood")->capture_default_str();
    app->add_option("--seed", seed, "Seed of the randomized eigensolver")->capture_default_str();
    app->add_option("--power-steps", power_steps, "Extra subspace iterations per snapshot")->capture_default_str();
    app->add_option("--diffusion-weight", weight, "modulus | trace")
        ->check(CLI::IsMember({"modulus", "trace"}))
        ->capture_default_str();
  }

  EigOptions options() const {
    EigOptions o;
    o.n_max = n_max;
    if (!rule.empty()) o.rule = parse_selection_rule(rule);
    o.snapshots = snapshots;
    o.seed = seed;
    o.power_steps = power_steps;
    o.weight = parse_diffusion_weight(weight);
    return o;
  }
};

std::vector<Variant> parse_variants(const std::vector<std::string>& names) {
  std::vector<Variant> out;
  for (const auto& n : names) out.push_back(parse_variant(n));
  return out;
}

void print_row(const std::vector<std::string>& cells) {
  for (const auto& c : cells) std::printf("%-14s", c.c_str());
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-level overlapping Schwarz preconditioners for high-contrast elasticity"};
  app.set_config("--config", "", "INI file with option values ([section] per subcommand)");
  app.require_subcommand(1);

  // gen-coeff
  auto* gen = app.add_subcommand("gen-coeff", "Write a synthetic coefficient field");
  std::string layout = "channels-and-inclusions";
  int gnx = 100, gny = 100, gNx = 10, gNy = 10;
  double geta = 1e6;
  std::string gout = "coefficient.txt", gpgm;
  gen->add_option("--layout", layout, "channels-and-inclusions | inclusions-only | homogeneous")->capture_default_str();
  gen->add_option("--nx", gnx)->capture_default_str();
  gen->add_option("--ny", gny)->capture_default_str();
  gen->add_option("--coarse-nx", gNx)->capture_default_str();
  gen->add_option("--coarse-ny", gNy)->capture_default_str();
  gen->add_option("--contrast", geta, "E_max / E_min")->capture_default_str();
  gen->add_option("-o,--output", gout, "Plain-text coefficient matrix")->capture_default_str();
  gen->add_option("--pgm", gpgm, "Also write a greymap image");

  // solve
  auto* solve = app.add_subcommand("solve", "Solve one benchmark problem with one preconditioner");
  BenchmarkConfig scfg;
  std::string svariant = "EH+Rot";
  double seta = 1e6;
  std::string scoeff, shistory;
  EigFlags seig;
  solve->add_option("--variant", svariant, "None, EE, HH, HH+Rot, EH, EH+Rot, EH+Rot;Rand, EE;Rand")
      ->capture_default_str();
  solve->add_option("--nx", scfg.nx)->capture_default_str();
  solve->add_option("--ny", scfg.ny)->capture_default_str();
  solve->add_option("--coarse-nx", scfg.Nx)->capture_default_str();
  solve->add_option("--coarse-ny", scfg.Ny)->capture_default_str();
  solve->add_option("--layout", scfg.layout)->capture_default_str();
  solve->add_option("--contrast", seta)->capture_default_str();
  solve->add_option("--coefficient", scoeff, "Read the modulus from a text file instead of the generator");
  solve->add_option("--nu", scfg.nu)->capture_default_str();
  solve->add_option("--force", scfg.force)->capture_default_str();
  solve->add_option("--tol", scfg.tol)->capture_default_str();
  solve->add_option("--maxit", scfg.maxit)->capture_default_str();
  solve->add_flag("--check-direct", scfg.check_direct, "Compare with a sparse direct solve");
  solve->add_option("--history", shistory, "CSV file for the residual history");
  seig.add(solve);

  // bench
  auto* bench = app.add_subcommand("bench", "Contrast sweep over preconditioner variants");
  BenchmarkConfig bcfg;
  std::vector<std::string> bvariants{"EE", "HH", "HH+Rot", "EH", "EH+Rot", "EH+Rot;Rand", "EE;Rand"};
  EigFlags beig;
  bool no_none = false;
  bcfg.output_dir = "bench_out";
  bench->add_option("--nx", bcfg.nx)->capture_default_str();
  bench->add_option("--ny", bcfg.ny)->capture_default_str();
  bench->add_option("--coarse-nx", bcfg.Nx)->capture_default_str();
  bench->add_option("--coarse-ny", bcfg.Ny)->capture_default_str();
  bench->add_option("--layout", bcfg.layout)->capture_default_str();
  bench->add_option("--contrasts", bcfg.contrasts, "Contrast values")->capture_default_str()->delimiter(',');
  bench->add_option("--variants", bvariants, "Preconditioner variants")->capture_default_str()->delimiter(',');
  bench->add_flag("--no-none", no_none, "Skip the unpreconditioned run");
  bench->add_option("--nu", bcfg.nu)->capture_default_str();
  bench->add_option("--force", bcfg.force)->capture_default_str();
  bench->add_option("--tol", bcfg.tol)->capture_default_str();
  bench->add_option("--maxit", bcfg.maxit)->capture_default_str();
  bench->add_flag("--check-direct", bcfg.check_direct, "Compare every converged solve with a direct solve");
  bench->add_option("--jobs", bcfg.jobs, "Cells solved concurrently")->capture_default_str();
  bench->add_option("-o,--output-dir", bcfg.output_dir)->capture_default_str();
  beig.add(bench);

  // optimize
  auto* opt = app.add_subcommand("optimize", "SIMP compliance minimization of a cantilever");
  OptimizeConfig ocfg;
  std::string ovariant = "EE;Rand";
  EigFlags oeig;
  ocfg.output_dir = "optimize_out";
  opt->add_option("--nx", ocfg.nx)->capture_default_str();
  opt->add_option("--ny", ocfg.ny)->capture_default_str();
  opt->add_option("--coarse-nx", ocfg.Nx)->capture_default_str();
  opt->add_option("--coarse-ny", ocfg.Ny)->capture_default_str();
  opt->add_option("--volume-fraction", ocfg.volume_fraction)->capture_default_str();
  opt->add_option("--filter-radius", ocfg.filter_radius, "In element widths")->capture_default_str();
  opt->add_option("--iterations", ocfg.iterations)->capture_default_str();
  opt->add_option("--penal", ocfg.simp.penal)->capture_default_str();
  opt->add_option("--e-min", ocfg.simp.E_min)->capture_default_str();
  opt->add_option("--e-max", ocfg.simp.E_max)->capture_default_str();
  opt->add_option("--nu", ocfg.simp.nu)->capture_default_str();
  opt->add_option("--move", ocfg.oc.move)->capture_default_str();
  opt->add_option("--damping", ocfg.oc.damping)->capture_default_str();
  opt->add_option("--variant", ovariant)->capture_default_str();
  opt->add_option("--reuse-period", ocfg.reuse.period, "Steps between preconditioner rebuilds")->capture_default_str();
  opt->add_option("--reuse-threshold", ocfg.reuse.threshold, "Rebuild when PCG needs more iterations");
  opt->add_option("--relative-threshold", ocfg.relative_threshold,
                  "Threshold as a multiple of the first solve's iterations (0: off)")
      ->capture_default_str();
  opt->add_option("--tol", ocfg.tol)->capture_default_str();
  opt->add_option("--maxit", ocfg.maxit)->capture_default_str();
  opt->add_flag("--direct", ocfg.direct, "Direct state solves");
  opt->add_flag("--verify-direct", ocfg.verify_direct, "Log the PCG error against a direct solve");
  opt->add_option("--force", ocfg.force)->capture_default_str();
  opt->add_option("--snapshot-every", ocfg.snapshot_every, "PGM density snapshot interval (0: final only)")
      ->capture_default_str();
  opt->add_option("-o,--output-dir", ocfg.output_dir)->capture_default_str();
  oeig.add(opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto mesh = build_fine_mesh(gnx, gny);
      const auto c = generate_coefficient(layout, mesh, geta, gNx, gNy);
      write_coefficient_text(mesh, c.modulus, gout);
      if (!gpgm.empty()) export_field_image(mesh, c.modulus, gpgm);
      std::cout << "wrote " << gout << " (layout v" << kLayoutVersion << ")\n";
    } else if (*solve) {
      scfg.eig = seig.options();
      const Variant v = parse_variant(svariant);
      BenchmarkProblem prob;
      if (scoeff.empty()) {
        scfg.validate();
        prob = make_benchmark_problem(scfg, seta);
      } else {
        int nx = 0, ny = 0;
        CoefficientField c;
        c.modulus = read_coefficient_text(scoeff, nx, ny);
        c.nu = scfg.nu;
        const auto [lo, hi] = std::minmax_element(c.modulus.begin(), c.modulus.end());
        c.E_min = *lo;
        c.E_max = *hi;
        scfg.nx = nx;
        scfg.ny = ny;
        scfg.validate();
        const auto mesh = build_fine_mesh(nx, ny);
        const auto load = opposing_forces(mesh, c, scfg.force);
        prob = make_problem(mesh, scfg.Nx, scfg.Ny, std::move(c), load);
      }
      Eigen::VectorXd direct;
      if (scfg.check_direct) direct = solve_direct(prob.K.matrix, prob.f);
      const auto r = solve_case(prob, v, scfg, scfg.check_direct ? &direct : nullptr);
      std::cout << "variant      " << to_string(v) << "\n"
                << "contrast     " << format_contrast(prob.coeff.contrast()) << "\n"
                << "iterations   " << format_iterations(r, scfg.maxit) << "\n"
                << "condition    " << format_condition(r.report.condition) << "\n"
                << "coarse dim   " << r.coarse_dim << "\n"
                << "selection    " << r.selection << "\n"
                << "time level1  " << r.times.level1 << " s\n"
                << "time coarse  " << r.times.coarse << " s\n"
                << "time solve   " << r.times.solve << " s\n";
      if (r.direct_error) std::cout << "direct error " << *r.direct_error << "\n";
      if (!shistory.empty()) {
        std::ofstream h(shistory);
        write_residual_history_csv(r.report, h);
      }
    } else if (*bench) {
      bcfg.variants = parse_variants(bvariants);
      bcfg.include_none = !no_none;
      bcfg.eig = beig.options();
      const auto res = run_benchmark(bcfg);
      std::vector<std::string> head{"variant"};
      for (double eta : bcfg.contrasts) head.push_back("eta=" + format_contrast(eta));
      print_row(head);
      const std::size_t nv = res.size() / bcfg.contrasts.size();
      for (std::size_t iv = 0; iv < nv; ++iv) {
        std::vector<std::string> row{std::string(to_string(res[iv].variant))};
        for (std::size_t ic = 0; ic < bcfg.contrasts.size(); ++ic)
          row.push_back(format_iterations(res[ic * nv + iv], bcfg.maxit));
        print_row(row);
      }
      std::cout << "tables written to " << bcfg.output_dir.string() << "\n";
    } else if (*opt) {
      ocfg.variant = parse_variant(ovariant);
      ocfg.eig = oeig.options();
      const auto res = optimize(ocfg);
      if (!res.log.empty())
        std::cout << "compliance " << res.log.front().compliance << " -> " << res.log.back().compliance << "\n";
      std::cout << "rebuilds " << res.rebuilds << ", coarse construction " << res.total_coarse_time << " s\n"
                << "log written to " << ocfg.output_dir.string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
