#include "hcdd/coarse.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <stdexcept>
#include <string>

namespace hcdd {

std::string_view to_string(CoarseKind kind) {
  switch (kind) {
    case CoarseKind::elasticity:
      return "E";
    case CoarseKind::heat:
      return "H";
    case CoarseKind::heat_rot:
      return "H+Rot";
  }
  return "?";
}

namespace {

void check_inputs(const CoarsePartition& part, std::span<const LocalEigProblem> problems,
                  std::span<const EigSelection> selections, ProblemKind kind) {
  const auto n = part.neighborhoods.size();
  if (problems.size() != n || selections.size() != n)
    throw std::invalid_argument("expected one eigen selection per interior coarse node (" + std::to_string(n) +
                                "), got " + std::to_string(selections.size()));
  for (std::size_t l = 0; l < n; ++l) {
    if (problems[l].kind != kind || selections[l].kind != kind)
      throw std::invalid_argument("eigen selection kind does not match the coarse space");
    if (problems[l].neighborhood != static_cast<int>(l))
      throw std::invalid_argument("local problems are not ordered by neighborhood");
    if (selections[l].n_sel < 1 || selections[l].n_sel > selections[l].available())
      throw std::invalid_argument("invalid selected mode count");
    if (selections[l].vectors.rows() != problems[l].dimension())
      throw std::invalid_argument("eigenvectors do not match their local problem");
  }
}

Eigen::SparseMatrix<double> from_triplets(int rows, int cols, const std::vector<Eigen::Triplet<double>>& t) {
  Eigen::SparseMatrix<double> P(rows, cols);
  P.setFromTriplets(t.begin(), t.end());
  P.makeCompressed();
  return P;
}

}  // namespace

CoarseBasis build_coarse_basis_elasticity(const CoarsePartition& part, const PartitionOfUnity& pou,
                                          const DofMap& dofs, std::span<const LocalEigProblem> problems,
                                          std::span<const EigSelection> selections) {
  check_inputs(part, problems, selections, ProblemKind::elasticity);
  CoarseBasis basis;
  basis.kind = CoarseKind::elasticity;
  std::vector<Eigen::Triplet<double>> t;
  int col = 0;
  for (std::size_t l = 0; l < problems.size(); ++l) {
    const auto& prob = problems[l];
    const auto& sel = selections[l];
    for (int s = 0; s < sel.n_sel; ++s, ++col) {
      for (int d = 0; d < prob.dimension(); ++d) {
        const double chi = pou.value(part, static_cast<int>(l), prob.node_of_dof[d]);
        const double v = chi * sel.vectors(d, s);
        if (v != 0.0) t.emplace_back(dofs.free_index(prob.node_of_dof[d], prob.component_of_dof[d]), col, v);
      }
    }
    basis.modes_per_node.push_back(sel.n_sel);
  }
  basis.prolongation = from_triplets(dofs.num_free(), col, t);
  return basis;
}

CoarseBasis build_coarse_basis_heat(const CoarsePartition& part, const PartitionOfUnity& pou, const DofMap& dofs,
                                    std::span<const LocalEigProblem> problems,
                                    std::span<const EigSelection> selections) {
  check_inputs(part, problems, selections, ProblemKind::diffusion);
  CoarseBasis basis;
  basis.kind = CoarseKind::heat;
  std::vector<Eigen::Triplet<double>> t;
  int col = 0;
  for (std::size_t l = 0; l < problems.size(); ++l) {
    const auto& prob = problems[l];
    const auto& sel = selections[l];
    for (int s = 0; s < sel.n_sel; ++s) {
      for (int c = 0; c < 2; ++c, ++col) {
        for (int d = 0; d < prob.dimension(); ++d) {
          const int node = prob.node_of_dof[d];
          const int row = dofs.free_index(node, c);
          const double v = pou.value(part, static_cast<int>(l), node) * sel.vectors(d, s);
          if (row >= 0 && v != 0.0) t.emplace_back(row, col, v);
        }
      }
    }
    basis.modes_per_node.push_back(2 * sel.n_sel);
  }
  basis.prolongation = from_triplets(dofs.num_free(), col, t);
  return basis;
}

CoarseBasis enrich_rotations(CoarseBasis basis, const CoarsePartition& part, const PartitionOfUnity& pou,
                             const DofMap& dofs) {
  if (basis.kind == CoarseKind::heat_rot) throw std::invalid_argument("coarse basis is already enriched");
  if (basis.kind != CoarseKind::heat) throw std::invalid_argument("rotation enrichment applies to heat bases");
  if (basis.modes_per_node.size() != part.neighborhoods.size())
    throw std::invalid_argument("basis does not belong to this partition");

  const auto& mesh = part.mesh;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(basis.prolongation.nonZeros()));
  for (int k = 0; k < basis.prolongation.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(basis.prolongation, k); it; ++it)
      t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());

  int col = basis.dim();
  for (std::size_t l = 0; l < part.neighborhoods.size(); ++l, ++col) {
    const auto& nb = part.neighborhoods[l];
    for (int j = nb.j0; j <= nb.j1; ++j)
      for (int i = nb.i0; i <= nb.i1; ++i) {
        const int node = mesh.node(i, j);
        const double chi = pou.values[l][nb.box_index(i, j)];
        if (chi == 0.0) continue;
        const Point p = mesh.node_coord(node);
        const double rot[2] = {-(p.y - nb.center.y), p.x - nb.center.x};
        for (int c = 0; c < 2; ++c) {
          const int row = dofs.free_index(node, c);
          if (row >= 0 && rot[c] != 0.0) t.emplace_back(row, col, chi * rot[c]);
        }
      }
    basis.modes_per_node[l] += 1;
  }
  basis.prolongation = from_triplets(dofs.num_free(), col, t);
  basis.kind = CoarseKind::heat_rot;
  return basis;
}

int gram_rank(const CoarseBasis& basis, double rel_tol) {
  if (basis.dim() == 0) return 0;
  const Eigen::MatrixXd G = Eigen::MatrixXd(basis.prolongation.transpose() * basis.prolongation);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  int rank = 0;
  for (int i = 0; i < ev.size(); ++i) rank += ev[i] > rel_tol * top ? 1 : 0;
  return rank;
}

double coarse_projection_residual(const CoarseBasis& basis, const Eigen::VectorXd& v) {
  const Eigen::MatrixXd P = Eigen::MatrixXd(basis.prolongation);
  const Eigen::VectorXd c = P.colPivHouseholderQr().solve(v);
  return (v - P * c).norm() / v.norm();
}

CoarseSolver::CoarseSolver(const Eigen::SparseMatrix<double>& K, const CoarseBasis& basis)
    : prolongation_(basis.prolongation) {
  if (K.rows() != prolongation_.rows())
    throw std::invalid_argument("coarse basis rows do not match the operator dimension");
  const Eigen::SparseMatrix<double> KP = K * prolongation_;
  const Eigen::SparseMatrix<double> k0 = prolongation_.transpose() * KP;
  k0_ = Eigen::MatrixXd(k0);
  k0_ = 0.5 * (k0_ + k0_.transpose()).eval();
  llt_.compute(k0_);
  if (llt_.info() != Eigen::Success)
    throw std::runtime_error("coarse matrix is not positive definite; Gram rank " +
                             std::to_string(gram_rank(basis)) + " of " + std::to_string(basis.dim()));
}

Eigen::VectorXd CoarseSolver::apply(const Eigen::VectorXd& r) const {
  if (k0_.rows() == 0) return Eigen::VectorXd::Zero(r.size());
  const Eigen::VectorXd rc = prolongation_.transpose() * r;
  return prolongation_ * llt_.solve(rc);
}

CoarseSolver assemble_coarse_operator(const SymmetricSparseOperator& K, const CoarseBasis& basis) {
  return CoarseSolver(K.matrix, basis);
}

}  // namespace hcdd
