#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hcdd/assembly.hpp"
#include "hcdd/coarse.hpp"
#include "hcdd/grid.hpp"
#include "hcdd/krylov.hpp"
#include "hcdd/spectral.hpp"

namespace hcdd {

/// The preconditioner family. Names follow the usual M_<level1><eigenproblem> notation.
enum class Variant { none, EE, HH, HH_Rot, EH, EH_Rot, EH_Rot_Rand, EE_Rand };

enum class Level1Kind { none, elasticity, heat_blocks };
enum class Eigensolver { dense, randomized };

struct VariantTraits {
  Level1Kind level1 = Level1Kind::none;
  ProblemKind eigenproblem = ProblemKind::elasticity;
  Eigensolver eigensolver = Eigensolver::dense;
  bool rotations = false;
  bool has_coarse = false;
};

VariantTraits traits(Variant v);
std::string_view to_string(Variant v);
/// Accepts "EE", "HH+Rot", "EH+Rot;Rand", ... with an optional "M_" prefix, and "None".
Variant parse_variant(std::string_view name);
std::span<const Variant> all_variants();

/// Weight of the scalar diffusion operators derived from the modulus.
enum class DiffusionWeight { modulus, trace };
DiffusionWeight parse_diffusion_weight(std::string_view name);
std::vector<double> diffusion_weight(const CoefficientField& coeff, DiffusionWeight w);

struct EigOptions {
  int n_max = 6;
  /// Defaults: fixed for elasticity eigenproblems, gap for diffusion ones.
  std::optional<SelectionRule> rule;
  int snapshots = 10;
  std::uint64_t seed = 0;
  int power_steps = 2;
  DiffusionWeight weight = DiffusionWeight::modulus;

  SelectionRule rule_for(ProblemKind kind) const;
};

using SparseCholesky = Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>>;

struct SparseLocalSolve {
  std::vector<int> dofs;  // R_i as an index list into the free dofs
  std::unique_ptr<SparseCholesky> factor;
};

struct HeatBlockSolve {
  std::vector<int> x_dofs;
  std::vector<int> y_dofs;
  std::unique_ptr<SparseCholesky> factor;  // shared by both displacement blocks
};

/// Additive two-level Schwarz: z = sum_i R_i^T K_i^{-1} R_i r + R_0^T K_0^{-1} R_0 r.
/// Variant `none` is the identity.
class TwoLevelPreconditioner final : public Preconditioner {
 public:
  TwoLevelPreconditioner() = default;

  /// Level 1 from explicit index sets of `K`, optional coarse space.
  TwoLevelPreconditioner(const Eigen::SparseMatrix<double>& K, const std::vector<std::vector<int>>& subdomains,
                         const CoarseBasis* coarse);

  Eigen::VectorXd apply(const Eigen::VectorXd& r) const override;
  int coarse_dim() const override { return coarse_ ? coarse_->dim() : 0; }

  Variant variant() const { return variant_; }
  const std::optional<CoarseBasis>& coarse_basis() const { return basis_; }
  const std::vector<int>& modes_per_node() const { return modes_per_node_; }
  SelectionRule selection_rule() const { return rule_; }
  int skipped_subdomains() const { return skipped_; }
  int local_factorizations() const { return static_cast<int>(elastic_.size() + heat_.size()); }
  /// Largest dimension among the level-1 factorized matrices.
  int max_local_dimension() const;
  const PhaseTimes& build_times() const { return times_; }

 private:
  friend TwoLevelPreconditioner build_preconditioner(Variant, const SymmetricSparseOperator&,
                                                     const CoarsePartition&, const PartitionOfUnity&,
                                                     const CoefficientField&, const EigOptions&);

  void add_elastic_subdomain(const Eigen::SparseMatrix<double>& K, std::vector<int> dofs);

  Variant variant_ = Variant::none;
  Eigen::Index n_ = 0;
  std::vector<SparseLocalSolve> elastic_;
  std::vector<HeatBlockSolve> heat_;
  std::optional<CoarseBasis> basis_;
  std::optional<CoarseSolver> coarse_;
  std::vector<int> modes_per_node_;
  SelectionRule rule_ = SelectionRule::fixed;
  int skipped_ = 0;
  PhaseTimes times_;
};

TwoLevelPreconditioner build_preconditioner(Variant variant, const SymmetricSparseOperator& K,
                                            const CoarsePartition& part, const PartitionOfUnity& pou,
                                            const CoefficientField& coeff, const EigOptions& options);

/// Local eigenproblems and selections for every neighborhood.
struct LocalSpectra {
  std::vector<LocalEigProblem> problems;
  std::vector<EigSelection> selections;
};

LocalSpectra compute_local_spectra(ProblemKind kind, Eigensolver solver, const CoarsePartition& part,
                                   const CoefficientField& coeff, const DofMap& dofs, const EigOptions& options);

/// Exact displacement-splitting preconditioner C_EL = diag(K_xx, K_yy).
class BlockDiagonalPreconditioner final : public Preconditioner {
 public:
  /// `first_block` is the number of x dofs at the front of the free vector.
  BlockDiagonalPreconditioner(const Eigen::SparseMatrix<double>& K, int first_block);
  Eigen::VectorXd apply(const Eigen::VectorXd& r) const override;

 private:
  int nx_ = 0;
  SparseCholesky xx_;
  SparseCholesky yy_;
};

/// Condition number 2 / (1 - nu/(1 - nu)) of the displacement-split operator.
double block_split_condition_bound(double nu);

/// Rows/columns `idx` of `A`.
Eigen::SparseMatrix<double> extract_submatrix(const Eigen::SparseMatrix<double>& A, std::span<const int> idx);

}  // namespace hcdd
