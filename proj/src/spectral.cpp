#include "hcdd/spectral.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>
#include <stdexcept>
#include <string>

namespace hcdd {

std::string_view to_string(ProblemKind kind) {
  return kind == ProblemKind::elasticity ? "elasticity" : "diffusion";
}

std::string_view to_string(SelectionRule rule) { return rule == SelectionRule::fixed ? "fixed" : "gap"; }

SelectionRule parse_selection_rule(std::string_view name) {
  if (name == "fixed") return SelectionRule::fixed;
  if (name == "gap") return SelectionRule::gap;
  throw std::invalid_argument("unknown selection rule '" + std::string(name) + "'");
}

LocalEigProblem build_local_problem(const CoarsePartition& part, int nbhd, ProblemKind kind,
                                    std::span<const double> weight, double nu, const DofMap& global_dofs) {
  if (nbhd < 0 || nbhd >= static_cast<int>(part.neighborhoods.size()))
    throw std::out_of_range("neighborhood index out of range");
  const auto& mesh = part.mesh;
  const auto& nb = part.neighborhoods[nbhd];
  const int components = kind == ProblemKind::elasticity ? 2 : 1;

  LocalEigProblem prob;
  prob.kind = kind;
  prob.neighborhood = nbhd;

  const int box = nb.num_box_nodes();
  std::vector<int> local(static_cast<std::size_t>(box) * components, -1);
  for (int c = 0; c < components; ++c)
    for (int j = nb.j0; j <= nb.j1; ++j)
      for (int i = nb.i0; i <= nb.i1; ++i) {
        const int node = mesh.node(i, j);
        if (!global_dofs.is_free(node, c)) {
          prob.neumann_only = false;
          continue;
        }
        local[c * box + nb.box_index(i, j)] = static_cast<int>(prob.node_of_dof.size());
        prob.node_of_dof.push_back(node);
        prob.component_of_dof.push_back(c);
      }
  const int n = static_cast<int>(prob.node_of_dof.size());
  if (n == 0) throw std::invalid_argument("neighborhood has no free dofs");

  auto lookup = [&](int node, int c) {
    return local[c * box + nb.box_index(mesh.node_i(node), mesh.node_j(node))];
  };
  const bool el = kind == ProblemKind::elasticity;
  prob.K = assemble_form(mesh, el ? FormKind::elasticity_stiffness : FormKind::diffusion_stiffness, weight, nu,
                         nb.elements, lookup, n);
  prob.M = assemble_form(mesh, el ? FormKind::elasticity_mass : FormKind::diffusion_mass, weight, nu,
                         nb.elements, lookup, n);

  prob.kernel = Eigen::MatrixXd::Zero(n, el ? 3 : 1);
  for (int d = 0; d < n; ++d) {
    if (!el) {
      prob.kernel(d, 0) = 1.0;
      continue;
    }
    const Point p = mesh.node_coord(prob.node_of_dof[d]);
    const int c = prob.component_of_dof[d];
    prob.kernel(d, c) = 1.0;
    prob.kernel(d, 2) = c == 0 ? -(p.y - nb.center.y) : (p.x - nb.center.x);
  }
  return prob;
}

EigSelection solve_local_eig_dense(const LocalEigProblem& prob, int k) {
  const int n = prob.dimension();
  if (k < 1 || k > n) throw std::invalid_argument("requested " + std::to_string(k) + " eigenpairs of a " +
                                                  std::to_string(n) + "-dimensional problem");
  Eigen::MatrixXd A = Eigen::MatrixXd(prob.K);
  Eigen::MatrixXd B = Eigen::MatrixXd(prob.M);
  Eigen::VectorXd w(n);
  Eigen::MatrixXd Z(n, k);
  std::vector<lapack_int> ifail(static_cast<std::size_t>(n));
  lapack_int found = 0;
  const double abstol = 2.0 * LAPACKE_dlamch('S');
  const lapack_int info = LAPACKE_dsygvx(LAPACK_COL_MAJOR, 1, 'V', 'I', 'U', n, A.data(), n, B.data(), n, 0.0,
                                         0.0, 1, k, abstol, &found, w.data(), Z.data(), n, ifail.data());
  if (info > n) throw std::runtime_error("local mass matrix is not positive definite");
  if (info != 0) throw std::runtime_error("dsygvx failed with info " + std::to_string(info));

  EigSelection sel;
  sel.kind = prob.kind;
  sel.eigenvalues = w.head(found);
  sel.vectors = Z.leftCols(found);
  sel.n_sel = static_cast<int>(found);
  sel.n_max = k;
  return sel;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

EigSelection solve_local_eig_randomized(const LocalEigProblem& prob, int k, const RandomizedOptions& options) {
  const int n = prob.dimension();
  const int m = options.snapshots;
  if (k < 1) throw std::invalid_argument("need at least one eigenpair");
  if (m < k) throw std::invalid_argument("snapshot count must be at least the number of eigenpairs");

  std::mt19937_64 rng(splitmix64(options.seed ^ splitmix64(static_cast<std::uint64_t>(prob.neighborhood))));

  // M-orthogonal projector onto the complement of the local kernel. Patches
  // touching the Dirichlet boundary have no kernel, and projecting there would
  // strip the forcing of its component along the lowest modes.
  const Eigen::MatrixXd& Zk = prob.kernel;
  const Eigen::MatrixXd MZ = prob.M * Zk;
  const Eigen::LLT<Eigen::MatrixXd> gram(Zk.transpose() * MZ);

  const double sigma = 1e-8 * Eigen::MatrixXd(prob.K).trace() / n;
  Eigen::SparseMatrix<double> shifted = prob.K + sigma * prob.M;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
  if (solver.info() != Eigen::Success) throw std::runtime_error("shifted local stiffness factorization failed");

  const int q = static_cast<int>(Zk.cols());
  const int blocks = 1 + options.power_steps;
  auto deflate = [&](Eigen::MatrixXd& Y) {
    if (prob.neumann_only) Y -= Zk * gram.solve(MZ.transpose() * Y);
  };

  Eigen::MatrixXd G(n, m);
  for (int l = 0; l < m; ++l) {
    for (int d = 0; d < n; ++d) G(d, l) = uniform01(rng);
    G.col(l).array() -= G.col(l).mean();
  }
  deflate(G);

  // Block Krylov space [Y, (S^-1 M) Y, ...]; each block is orthonormalized
  // before the next solve so the columns do not collapse onto one mode.
  Eigen::MatrixXd W(n, blocks * m + q);
  Eigen::MatrixXd Y = solver.solve(prob.M * G);
  for (int b = 0; b < blocks; ++b) {
    W.middleCols(b * m, m) = Y;
    if (b + 1 == blocks) break;
    deflate(Y);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    const Eigen::MatrixXd Qb = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
    Y = solver.solve(prob.M * Qb);
  }
  W.rightCols(q) = Zk;
  for (int c = 0; c < W.cols(); ++c) {
    const double nrm = W.col(c).norm();
    if (nrm > 0.0) W.col(c) /= nrm;
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(W, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  int rank = 0;
  while (rank < sv.size() && sv[rank] > 1e-10 * sv[0]) ++rank;

  EigSelection sel;
  sel.kind = prob.kind;
  sel.basis_truncated = rank < W.cols();
  if (rank < k) {
    std::clog << "warning: neighborhood " << prob.neighborhood << " snapshot basis has rank " << rank << " of "
              << W.cols() << "\n";
  }
  const Eigen::MatrixXd U = svd.matrixU().leftCols(rank);
  Eigen::MatrixXd Kr = U.transpose() * (prob.K * U);
  Eigen::MatrixXd Mr = U.transpose() * (prob.M * U);
  Kr = 0.5 * (Kr + Kr.transpose()).eval();
  Mr = 0.5 * (Mr + Mr.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Kr, Mr);
  if (es.info() != Eigen::Success) throw std::runtime_error("reduced eigenproblem failed");

  sel.eigenvalues = es.eigenvalues();
  sel.vectors = U * es.eigenvectors();
  sel.n_max = k;
  sel.n_sel = std::min(k, rank);
  return sel;
}

EigSelection select_modes(EigSelection sel, int n_max, SelectionRule rule) {
  if (n_max < 1) throw std::invalid_argument("N_max must be at least 1");
  const int avail = sel.available();
  if (avail == 0) throw std::invalid_argument("no eigenpairs to select from");
  sel.n_max = n_max;
  sel.rule = rule;
  if (rule == SelectionRule::fixed) {
    sel.n_sel = std::min(n_max, avail);
    return sel;
  }
  if (sel.kind == ProblemKind::elasticity)
    throw std::invalid_argument("gap selection is only defined for diffusion eigenproblems");

  const int m = std::min(n_max + 1, avail);
  const auto& lam = sel.eigenvalues;
  const double eps = kKernelTolerance * std::abs(lam[m - 1]);
  int kernel = 0;
  while (kernel < m && lam[kernel] <= eps) ++kernel;

  int best = 0;
  double best_ratio = 0.0;
  for (int i = std::max(kernel, 0); i + 1 < m && i < n_max; ++i) {
    if (lam[i] <= eps) continue;
    const double ratio = lam[i + 1] / lam[i];
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = i + 1;  // count of modes before the gap
    }
  }
  sel.n_sel = best_ratio >= kGapThreshold ? best : std::max(1, kernel);
  sel.n_sel = std::min(sel.n_sel, n_max);
  return sel;
}

}  // namespace hcdd
