#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <span>
#include <string_view>
#include <vector>

#include "hcdd/assembly.hpp"
#include "hcdd/grid.hpp"
#include "hcdd/spectral.hpp"

namespace hcdd {

enum class CoarseKind { elasticity, heat, heat_rot };

std::string_view to_string(CoarseKind kind);

/// Coarse space spanned by partition-of-unity weighted local eigenvectors.
///
/// `prolongation` is R_0^T: one column per basis vector, rows indexed by the
/// free displacement dofs of the global problem. Columns are ordered by
/// neighborhood; rotation enrichment vectors come last.
struct CoarseBasis {
  CoarseKind kind = CoarseKind::elasticity;
  Eigen::SparseMatrix<double> prolongation;
  std::vector<int> modes_per_node;

  int dim() const { return static_cast<int>(prolongation.cols()); }
};

/// `problems[l]` and `selections[l]` belong to neighborhood l; the first
/// `n_sel` eigenvectors of each selection are used.
CoarseBasis build_coarse_basis_elasticity(const CoarsePartition& part, const PartitionOfUnity& pou,
                                          const DofMap& dofs, std::span<const LocalEigProblem> problems,
                                          std::span<const EigSelection> selections);

/// Each scalar eigenvector yields an x-slot and a y-slot displacement vector.
CoarseBasis build_coarse_basis_heat(const CoarsePartition& part, const PartitionOfUnity& pou, const DofMap& dofs,
                                    std::span<const LocalEigProblem> problems,
                                    std::span<const EigSelection> selections);

/// Appends chi_i * [-(y - y_i), x - x_i] for every interior coarse node y_i.
CoarseBasis enrich_rotations(CoarseBasis basis, const CoarsePartition& part, const PartitionOfUnity& pou,
                             const DofMap& dofs);

/// Rank of R_0 R_0^T, eigenvalues below rel_tol * largest count as zero.
int gram_rank(const CoarseBasis& basis, double rel_tol = 1e-10);

/// ||v - P c*|| / ||v|| for the least-squares best coefficients c*.
double coarse_projection_residual(const CoarseBasis& basis, const Eigen::VectorXd& v);

/// K_0 = R_0 K R_0^T with a dense Cholesky factorization kept for repeated solves.
class CoarseSolver {
 public:
  CoarseSolver() = default;
  CoarseSolver(const Eigen::SparseMatrix<double>& K, const CoarseBasis& basis);

  int dim() const { return static_cast<int>(k0_.rows()); }
  const Eigen::MatrixXd& matrix() const { return k0_; }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }
  /// R_0^T K_0^{-1} R_0 r
  Eigen::VectorXd apply(const Eigen::VectorXd& r) const;
  /// The coarse Galerkin approximation R_0^T K_0^{-1} R_0 b of K^{-1} b.
  Eigen::VectorXd galerkin_solution(const Eigen::VectorXd& b) const { return apply(b); }

 private:
  Eigen::SparseMatrix<double> prolongation_;
  Eigen::MatrixXd k0_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

CoarseSolver assemble_coarse_operator(const SymmetricSparseOperator& K, const CoarseBasis& basis);

}  // namespace hcdd
