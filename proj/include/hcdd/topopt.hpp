#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "hcdd/assembly.hpp"
#include "hcdd/grid.hpp"
#include "hcdd/schwarz.hpp"

namespace hcdd {

struct SimpParams {
  double penal = 3.0;
  double E_max = 1.0;
  double E_min = 1e-6;
  double nu = 0.3;
};

/// Rebuild the preconditioner every `period` optimization steps, or earlier
/// when the previous state solve needed more than `threshold` PCG iterations.
struct ReusePolicy {
  int period = 1;
  int threshold = std::numeric_limits<int>::max();

  void validate() const;
  bool should_rebuild(int age, int last_iterations) const;
};

struct ComplianceSensitivity {
  double compliance = 0.0;
  Eigen::VectorXd dc;  // with respect to the physical (filtered) density
};

/// g0 = f^T u and dg0/drho_e = -p rho_e^(p-1) (E_max - E_min) u_e^T k0 u_e.
ComplianceSensitivity compliance_and_sensitivity(const FineMesh& mesh, const DofMap& dofs, const Eigen::VectorXd& u,
                                                 const Eigen::VectorXd& f, const Eigen::VectorXd& rho_phys,
                                                 const SimpParams& simp);

CoefficientField simp_field(const Eigen::VectorXd& rho_phys, const SimpParams& simp);

struct OcParams {
  double move = 0.2;
  double damping = 0.5;
};

/// Optimality-criteria step. `dc` and `dv` are sensitivities with respect to
/// the design variables; the multiplier is bisected until the filtered volume
/// v^T W rho_new equals `target_volume`.
Eigen::VectorXd oc_update(const Eigen::VectorXd& rho, const Eigen::VectorXd& dc, const Eigen::VectorXd& dv,
                          const Eigen::VectorXd& v, double target_volume, const DensityFilter& filter,
                          const OcParams& oc = {});

struct OptimizeConfig {
  int nx = 60, ny = 60;
  int Nx = 3, Ny = 3;
  double volume_fraction = 0.3;
  double filter_radius = 1.5;  // in element widths
  int iterations = 100;
  SimpParams simp;
  OcParams oc;
  Variant variant = Variant::EE_Rand;
  EigOptions eig;
  ReusePolicy reuse;
  /// When positive, the iteration threshold becomes ceil(factor * first solve count).
  double relative_threshold = 0.0;
  /// Tighter than the solve default: SIMP stiffness spans six decades, so a 1e-6
  /// residual can leave a 1e-4 error in u.
  double tol = 1e-8;
  int maxit = 2000;
  bool direct = false;         // sparse Cholesky state solves instead of PCG
  bool verify_direct = false;  // record the PCG error against a direct solve
  double force = 1.0;
  std::filesystem::path output_dir;
  int snapshot_every = 0;

  void validate() const;
};

struct IterationLog {
  int iteration = 0;
  double compliance = 0.0;
  double volume = 0.0;       // v^T rho_f after the update
  double volume_error = 0.0; // |v^T rho_f - V*| / V*
  int pcg_iterations = 0;
  bool rebuilt = false;
  bool retried = false;
  std::optional<double> condition;
  double coarse_time = 0.0;
  double level1_time = 0.0;
  std::optional<double> direct_error;
};

struct OptimizeResult {
  Eigen::VectorXd rho;
  Eigen::VectorXd rho_phys;
  std::vector<IterationLog> log;
  double total_coarse_time = 0.0;
  int rebuilds = 0;
};

/// Cantilever: left edge clamped, downward force at the middle of the right edge.
std::vector<int> cantilever_dirichlet(const FineMesh& mesh);
LoadSpec cantilever_load(const FineMesh& mesh, double F);

OptimizeResult optimize(const OptimizeConfig& cfg);

void write_optimization_log_csv(const std::vector<IterationLog>& log, std::ostream& out);

}  // namespace hcdd
