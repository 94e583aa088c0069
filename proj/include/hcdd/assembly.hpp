#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "hcdd/grid.hpp"

namespace hcdd {

using ElasticElementMatrix = Eigen::Matrix<double, 8, 8>;  // dofs [u0x, u0y, u1x, u1y, ...]
using ScalarElementMatrix = Eigen::Matrix4d;

/// Plane-stress Q1 stiffness of a square element of side `h`, 2x2 Gauss rule.
ElasticElementMatrix element_stiffness_elasticity(double modulus, double nu, double h);
ScalarElementMatrix element_stiffness_diffusion(double kappa, double h);
ScalarElementMatrix element_mass(double weight, double h);

/// Per-element Young's modulus with a common Poisson ratio.
struct CoefficientField {
  std::vector<double> modulus;
  double nu = 0.3;
  double E_min = 1.0;
  double E_max = 1.0;

  double contrast() const { return E_max / E_min; }
  /// Throws unless sizes match and every modulus lies in [E_min, E_max] with E_min > 0.
  void validate(int num_elements) const;
};

CoefficientField homogeneous_field(const FineMesh& mesh, double modulus, double nu);

/// Raw dofs are grouped by component: `raw = component * num_nodes + node`.
/// Free dofs keep the raw order with Dirichlet dofs removed, so the free
/// vector is again [all x dofs, all y dofs].
struct DofMap {
  int components = 1;
  int num_nodes = 0;
  std::vector<int> raw_to_free;  // -1 for constrained dofs
  std::vector<int> free_to_raw;

  int num_raw() const { return components * num_nodes; }
  int num_free() const { return static_cast<int>(free_to_raw.size()); }
  int free_index(int node, int component) const { return raw_to_free[component * num_nodes + node]; }
  bool is_free(int node, int component) const { return free_index(node, component) >= 0; }
  /// Number of free dofs of the first component; the x block of an elasticity vector.
  int first_block_size() const;
};

DofMap make_dof_map(const FineMesh& mesh, int components, std::span<const int> dirichlet_raw);
/// Raw dofs of every boundary node, all components.
std::vector<int> boundary_dirichlet(const FineMesh& mesh, int components);

struct SymmetricSparseOperator {
  Eigen::SparseMatrix<double> matrix;
  DofMap dofs;

  int dimension() const { return static_cast<int>(matrix.rows()); }
};

enum class FormKind { elasticity_stiffness, elasticity_mass, diffusion_stiffness, diffusion_mass };

/// Assembles one bilinear form over `elements`. `dof_index(node, component)`
/// returns the row/column of that nodal dof or -1 when it is eliminated.
/// Contributions are summed in element order, so repeated calls are bit-identical.
Eigen::SparseMatrix<double> assemble_form(const FineMesh& mesh, FormKind form,
                                          std::span<const double> weight, double nu,
                                          std::span<const int> elements,
                                          const std::function<int(int, int)>& dof_index, int dim);

SymmetricSparseOperator assemble_elasticity(const FineMesh& mesh, const CoefficientField& coeff,
                                            std::span<const int> dirichlet_raw);
SymmetricSparseOperator assemble_diffusion(const FineMesh& mesh, std::span<const double> kappa,
                                           std::span<const int> dirichlet_raw);

enum class MassKind { elasticity, diffusion };
SymmetricSparseOperator assemble_weighted_mass(const FineMesh& mesh, std::span<const double> weight,
                                               MassKind kind, std::span<const int> dirichlet_raw = {});

struct PointLoad {
  int node = 0;
  int component = 0;
  double magnitude = 0.0;
};

struct LoadSpec {
  std::vector<PointLoad> point_loads;
  std::vector<std::array<double, 2>> body_force;  // per element, force per unit area; empty = none

  /// Spreads a force acting on element `e` equally over its four nodes.
  void add_element_force(const FineMesh& mesh, int e, double fx, double fy);
};

Eigen::VectorXd assemble_load(const FineMesh& mesh, const LoadSpec& load, const DofMap& dofs);

/// SIMP interpolation E_min + rho^p (E_max - E_min).
double simp_modulus(double rho, double p, double E_min, double E_max);

/// Linear cone filter on element centroids, weights max(0, r - dist), rows
/// normalised to one.
class DensityFilter {
 public:
  DensityFilter(const FineMesh& mesh, double radius);

  Eigen::VectorXd apply(const Eigen::VectorXd& rho) const { return weights_ * rho; }
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& g) const { return weights_.transpose() * g; }
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& weights() const { return weights_; }

 private:
  Eigen::SparseMatrix<double, Eigen::RowMajor> weights_;
};

Eigen::VectorXd density_filter(const FineMesh& mesh, const Eigen::VectorXd& rho, double radius);

}  // namespace hcdd
