#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hcdd/assembly.hpp"
#include "hcdd/grid.hpp"

namespace hcdd {

enum class ProblemKind { elasticity, diffusion };
enum class SelectionRule { fixed, gap };

std::string_view to_string(ProblemKind kind);
std::string_view to_string(SelectionRule rule);
SelectionRule parse_selection_rule(std::string_view name);

/// Generalized eigenproblem K phi = lambda M phi posed on one coarse-node
/// neighborhood: Neumann on the neighborhood boundary, Dirichlet wherever the
/// global problem constrains a dof.
///
/// Local dofs are component grouped like the global ones; `node_of_dof` and
/// `component_of_dof` give the global location of each local dof.
struct LocalEigProblem {
  ProblemKind kind = ProblemKind::elasticity;
  int neighborhood = 0;
  std::vector<int> node_of_dof;
  std::vector<int> component_of_dof;
  Eigen::SparseMatrix<double> K;
  Eigen::SparseMatrix<double> M;
  /// Rigid body modes (elasticity) or constants (diffusion) restricted to the
  /// local dofs. A true kernel of K only when `neumann_only`.
  Eigen::MatrixXd kernel;
  bool neumann_only = true;

  int dimension() const { return static_cast<int>(K.rows()); }
};

/// `weight` is the per-element modulus used for both the stiffness and the
/// mass weighting; `global_dofs` is the displacement dof map of the global
/// problem and decides which local dofs are eliminated.
LocalEigProblem build_local_problem(const CoarsePartition& part, int nbhd, ProblemKind kind,
                                    std::span<const double> weight, double nu, const DofMap& global_dofs);

/// Eigenpairs of one local problem, ascending, with M-orthonormal eigenvectors.
/// The first `n_sel` pairs are the ones used to build the coarse space.
struct EigSelection {
  ProblemKind kind = ProblemKind::elasticity;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd vectors;
  int n_sel = 0;
  int n_max = 0;
  SelectionRule rule = SelectionRule::fixed;
  bool basis_truncated = false;  // randomized path dropped dependent snapshots

  int available() const { return static_cast<int>(eigenvalues.size()); }
};

/// First `k` eigenpairs via LAPACK's subset generalized symmetric solver.
EigSelection solve_local_eig_dense(const LocalEigProblem& prob, int k);

struct RandomizedOptions {
  int snapshots = 10;
  std::uint64_t seed = 0;
  /// Extra block applications of (K + sigma M)^{-1} M; every iterate joins the
  /// snapshot space. Zero gives the plain one-solve-per-forcing space.
  int power_steps = 2;
};

/// Rayleigh-Ritz on the span of random-forcing snapshots plus the local kernel.
/// The random stream depends only on `options.seed` and the neighborhood index.
EigSelection solve_local_eig_randomized(const LocalEigProblem& prob, int k, const RandomizedOptions& options);

/// Relative eigenvalue jump a gap must reach before the gap rule selects past
/// the kernel.
inline constexpr double kGapThreshold = 10.0;
/// Eigenvalues below this fraction of lambda_{N_max+1} are treated as exact kernel.
inline constexpr double kKernelTolerance = 1e-10;

/// `fixed` keeps min(n_max, available) pairs. `gap` (diffusion only) keeps
/// everything up to the largest relative jump lambda_{i+1}/lambda_i among
/// the first n_max + 1 non-kernel eigenvalues, when that jump reaches
/// kGapThreshold; otherwise it keeps the kernel (at least one mode).
EigSelection select_modes(EigSelection sel, int n_max, SelectionRule rule);

}  // namespace hcdd
