#include "hcdd/schwarz.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <iostream>
#include <stdexcept>

namespace hcdd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

constexpr std::array<Variant, 8> kVariants = {Variant::none,   Variant::EE,     Variant::HH,
                                              Variant::HH_Rot, Variant::EH,     Variant::EH_Rot,
                                              Variant::EH_Rot_Rand, Variant::EE_Rand};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Level-1 subdomain nodes: the closed box minus the parts of its edges that
// lie inside the domain.
bool in_subdomain(const Neighborhood& nb, const FineMesh& mesh, int i, int j) {
  if ((i == nb.i0 && nb.i0 > 0) || (i == nb.i1 && nb.i1 < mesh.nx)) return false;
  if ((j == nb.j0 && nb.j0 > 0) || (j == nb.j1 && nb.j1 < mesh.ny)) return false;
  return true;
}

}  // namespace

VariantTraits traits(Variant v) {
  using L = Level1Kind;
  using P = ProblemKind;
  using S = Eigensolver;
  switch (v) {
    case Variant::none:
      return {L::none, P::elasticity, S::dense, false, false};
    case Variant::EE:
      return {L::elasticity, P::elasticity, S::dense, false, true};
    case Variant::HH:
      return {L::heat_blocks, P::diffusion, S::dense, false, true};
    case Variant::HH_Rot:
      return {L::heat_blocks, P::diffusion, S::dense, true, true};
    case Variant::EH:
      return {L::elasticity, P::diffusion, S::dense, false, true};
    case Variant::EH_Rot:
      return {L::elasticity, P::diffusion, S::dense, true, true};
    case Variant::EH_Rot_Rand:
      return {L::elasticity, P::diffusion, S::randomized, true, true};
    case Variant::EE_Rand:
      return {L::elasticity, P::elasticity, S::randomized, false, true};
  }
  throw std::invalid_argument("unknown variant");
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::none:
      return "None";
    case Variant::EE:
      return "EE";
    case Variant::HH:
      return "HH";
    case Variant::HH_Rot:
      return "HH+Rot";
    case Variant::EH:
      return "EH";
    case Variant::EH_Rot:
      return "EH+Rot";
    case Variant::EH_Rot_Rand:
      return "EH+Rot;Rand";
    case Variant::EE_Rand:
      return "EE;Rand";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  std::string key = lower(name);
  if (key.rfind("m_", 0) == 0) key = key.substr(2);
  for (Variant v : kVariants)
    if (lower(to_string(v)) == key) return v;
  throw std::invalid_argument("unknown preconditioner variant '" + std::string(name) + "'");
}

std::span<const Variant> all_variants() { return kVariants; }

DiffusionWeight parse_diffusion_weight(std::string_view name) {
  if (name == "modulus") return DiffusionWeight::modulus;
  if (name == "trace") return DiffusionWeight::trace;
  throw std::invalid_argument("unknown diffusion weight '" + std::string(name) + "'");
}

std::vector<double> diffusion_weight(const CoefficientField& coeff, DiffusionWeight w) {
  if (w == DiffusionWeight::modulus) return coeff.modulus;
  // Trace of the plane-stress Voigt matrix of unit modulus.
  const double nu = coeff.nu;
  const double tr = (2.0 + 0.5 * (1.0 - nu)) / (1.0 - nu * nu);
  std::vector<double> out(coeff.modulus);
  for (double& v : out) v *= tr;
  return out;
}

SelectionRule EigOptions::rule_for(ProblemKind kind) const {
  if (rule) return *rule;
  return kind == ProblemKind::elasticity ? SelectionRule::fixed : SelectionRule::gap;
}

Eigen::SparseMatrix<double> extract_submatrix(const Eigen::SparseMatrix<double>& A, std::span<const int> idx) {
  std::vector<int> local(static_cast<std::size_t>(A.rows()), -1);
  for (std::size_t k = 0; k < idx.size(); ++k) local[idx[k]] = static_cast<int>(k);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t c = 0; c < idx.size(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, idx[c]); it; ++it) {
      const int r = local[it.row()];
      if (r >= 0) t.emplace_back(r, static_cast<int>(c), it.value());
    }
  Eigen::SparseMatrix<double> S(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
  S.setFromTriplets(t.begin(), t.end());
  S.makeCompressed();
  return S;
}

void TwoLevelPreconditioner::add_elastic_subdomain(const Eigen::SparseMatrix<double>& K, std::vector<int> dofs) {
  if (dofs.empty()) return;
  auto factor = std::make_unique<SparseCholesky>(extract_submatrix(K, dofs));
  if (factor->info() != Eigen::Success) {
    std::clog << "warning: singular subdomain matrix skipped\n";
    ++skipped_;
    return;
  }
  elastic_.push_back({std::move(dofs), std::move(factor)});
}

TwoLevelPreconditioner::TwoLevelPreconditioner(const Eigen::SparseMatrix<double>& K,
                                               const std::vector<std::vector<int>>& subdomains,
                                               const CoarseBasis* coarse)
    : variant_(Variant::EE), n_(K.rows()) {
  const auto t0 = Clock::now();
  for (const auto& s : subdomains) {
    for (int d : s)
      if (d < 0 || d >= n_) throw std::invalid_argument("subdomain index out of range");
    add_elastic_subdomain(K, s);
  }
  times_.level1 = seconds_since(t0);
  if (coarse && coarse->dim() > 0) {
    const auto t1 = Clock::now();
    basis_ = *coarse;
    coarse_.emplace(K, *coarse);
    modes_per_node_ = coarse->modes_per_node;
    times_.coarse = seconds_since(t1);
  }
}

int TwoLevelPreconditioner::max_local_dimension() const {
  int m = 0;
  for (const auto& s : elastic_) m = std::max(m, static_cast<int>(s.dofs.size()));
  for (const auto& s : heat_) m = std::max(m, static_cast<int>(s.x_dofs.size()));
  return m;
}

Eigen::VectorXd TwoLevelPreconditioner::apply(const Eigen::VectorXd& r) const {
  if (r.size() != n_ && variant_ != Variant::none) throw std::invalid_argument("residual has the wrong dimension");
  if (variant_ == Variant::none) return r;

  const int ne = static_cast<int>(elastic_.size());
  const int nh = static_cast<int>(heat_.size());
  std::vector<Eigen::VectorXd> local(static_cast<std::size_t>(ne + 2 * nh));

#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < ne + nh; ++s) {
    if (s < ne) {
      const auto& sub = elastic_[s];
      Eigen::VectorXd rs(static_cast<Eigen::Index>(sub.dofs.size()));
      for (std::size_t k = 0; k < sub.dofs.size(); ++k) rs[k] = r[sub.dofs[k]];
      local[s] = sub.factor->solve(rs);
    } else {
      const auto& sub = heat_[s - ne];
      const auto m = static_cast<Eigen::Index>(sub.x_dofs.size());
      Eigen::MatrixXd rs(m, 2);
      for (Eigen::Index k = 0; k < m; ++k) {
        rs(k, 0) = r[sub.x_dofs[k]];
        rs(k, 1) = r[sub.y_dofs[k]];
      }
      const Eigen::MatrixXd zs = sub.factor->solve(rs);
      local[ne + 2 * (s - ne)] = zs.col(0);
      local[ne + 2 * (s - ne) + 1] = zs.col(1);
    }
  }

  Eigen::VectorXd z = coarse_ ? coarse_->apply(r) : Eigen::VectorXd::Zero(n_);
  for (int s = 0; s < ne; ++s) {
    const auto& dofs = elastic_[s].dofs;
    for (std::size_t k = 0; k < dofs.size(); ++k) z[dofs[k]] += local[s][k];
  }
  for (int s = 0; s < nh; ++s) {
    const auto& sub = heat_[s];
    const auto& zx = local[ne + 2 * s];
    const auto& zy = local[ne + 2 * s + 1];
    for (std::size_t k = 0; k < sub.x_dofs.size(); ++k) {
      z[sub.x_dofs[k]] += zx[k];
      z[sub.y_dofs[k]] += zy[k];
    }
  }
  return z;
}

LocalSpectra compute_local_spectra(ProblemKind kind, Eigensolver solver, const CoarsePartition& part,
                                   const CoefficientField& coeff, const DofMap& dofs, const EigOptions& options) {
  const int n = static_cast<int>(part.neighborhoods.size());
  const SelectionRule rule = options.rule_for(kind);
  const std::vector<double> weight =
      kind == ProblemKind::elasticity ? coeff.modulus : diffusion_weight(coeff, options.weight);

  LocalSpectra out;
  out.problems.resize(static_cast<std::size_t>(n));
  out.selections.resize(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));

#pragma omp parallel for schedule(dynamic)
  for (int l = 0; l < n; ++l) {
    try {
      auto prob = build_local_problem(part, l, kind, weight, coeff.nu, dofs);
      const int wanted = rule == SelectionRule::gap ? options.n_max + 1 : options.n_max;
      const int k = std::min(wanted, prob.dimension());
      EigSelection sel = solver == Eigensolver::dense
                             ? solve_local_eig_dense(prob, k)
                             : solve_local_eig_randomized(
                                   prob, k, {std::max(options.snapshots, k), options.seed, options.power_steps});
      out.selections[l] = select_modes(std::move(sel), options.n_max, rule);
      out.problems[l] = std::move(prob);
    } catch (const std::exception& e) {
      errors[l] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("local eigenproblem failed: " + e);
  return out;
}

TwoLevelPreconditioner build_preconditioner(Variant variant, const SymmetricSparseOperator& K,
                                            const CoarsePartition& part, const PartitionOfUnity& pou,
                                            const CoefficientField& coeff, const EigOptions& options) {
  TwoLevelPreconditioner pc;
  pc.variant_ = variant;
  pc.n_ = K.dimension();
  const VariantTraits tr = traits(variant);
  if (variant == Variant::none) return pc;
  if (K.dofs.components != 2) throw std::invalid_argument("preconditioner needs an elasticity operator");
  if (K.dofs.num_nodes != part.mesh.num_nodes()) throw std::invalid_argument("operator and partition differ");
  if (part.neighborhoods.empty()) throw std::invalid_argument("partition has no interior coarse nodes");

  const auto& mesh = part.mesh;
  const DofMap& dofs = K.dofs;
  const int nn = static_cast<int>(part.neighborhoods.size());

  const auto t0 = Clock::now();
  if (tr.level1 == Level1Kind::elasticity) {
    std::vector<std::vector<int>> subs(static_cast<std::size_t>(nn));
    for (int l = 0; l < nn; ++l) {
      const auto& nb = part.neighborhoods[l];
      for (int c = 0; c < 2; ++c)
        for (int j = nb.j0; j <= nb.j1; ++j)
          for (int i = nb.i0; i <= nb.i1; ++i) {
            if (!in_subdomain(nb, mesh, i, j)) continue;
            const int d = dofs.free_index(mesh.node(i, j), c);
            if (d >= 0) subs[l].push_back(d);
          }
    }
    std::vector<std::unique_ptr<SparseCholesky>> factors(static_cast<std::size_t>(nn));
#pragma omp parallel for schedule(dynamic)
    for (int l = 0; l < nn; ++l)
      if (!subs[l].empty()) factors[l] = std::make_unique<SparseCholesky>(extract_submatrix(K.matrix, subs[l]));
    for (int l = 0; l < nn; ++l) {
      if (!factors[l]) continue;
      if (factors[l]->info() != Eigen::Success) {
        std::clog << "warning: singular subdomain matrix " << l << " skipped\n";
        ++pc.skipped_;
        continue;
      }
      pc.elastic_.push_back({std::move(subs[l]), std::move(factors[l])});
    }
  } else {
    std::vector<int> scalar_dirichlet;
    for (int node = 0; node < mesh.num_nodes(); ++node) {
      if (dofs.is_free(node, 0) != dofs.is_free(node, 1))
        throw std::invalid_argument("heat-block level 1 needs identical constraints on both components");
      if (!dofs.is_free(node, 0)) scalar_dirichlet.push_back(node);
    }
    const auto H = assemble_diffusion(mesh, diffusion_weight(coeff, options.weight), scalar_dirichlet);
    std::vector<HeatBlockSolve> blocks(static_cast<std::size_t>(nn));
    std::vector<std::vector<int>> scalar(static_cast<std::size_t>(nn));
    for (int l = 0; l < nn; ++l) {
      const auto& nb = part.neighborhoods[l];
      for (int j = nb.j0; j <= nb.j1; ++j)
        for (int i = nb.i0; i <= nb.i1; ++i) {
          if (!in_subdomain(nb, mesh, i, j)) continue;
          const int node = mesh.node(i, j);
          const int s = H.dofs.free_index(node, 0);
          if (s < 0) continue;
          scalar[l].push_back(s);
          blocks[l].x_dofs.push_back(dofs.free_index(node, 0));
          blocks[l].y_dofs.push_back(dofs.free_index(node, 1));
        }
    }
#pragma omp parallel for schedule(dynamic)
    for (int l = 0; l < nn; ++l)
      if (!scalar[l].empty()) blocks[l].factor = std::make_unique<SparseCholesky>(extract_submatrix(H.matrix, scalar[l]));
    for (auto& b : blocks) {
      if (!b.factor) continue;
      if (b.factor->info() != Eigen::Success) {
        std::clog << "warning: singular heat subdomain matrix skipped\n";
        ++pc.skipped_;
        continue;
      }
      pc.heat_.push_back(std::move(b));
    }
  }
  pc.times_.level1 = seconds_since(t0);

  const auto t1 = Clock::now();
  const auto spectra = compute_local_spectra(tr.eigenproblem, tr.eigensolver, part, coeff, dofs, options);
  pc.rule_ = options.rule_for(tr.eigenproblem);
  CoarseBasis basis;
  if (tr.eigenproblem == ProblemKind::elasticity) {
    basis = build_coarse_basis_elasticity(part, pou, dofs, spectra.problems, spectra.selections);
  } else {
    basis = build_coarse_basis_heat(part, pou, dofs, spectra.problems, spectra.selections);
    if (tr.rotations) basis = enrich_rotations(std::move(basis), part, pou, dofs);
  }
  pc.coarse_.emplace(K.matrix, basis);
  pc.modes_per_node_ = basis.modes_per_node;
  pc.basis_ = std::move(basis);
  pc.times_.coarse = seconds_since(t1);
  return pc;
}

BlockDiagonalPreconditioner::BlockDiagonalPreconditioner(const Eigen::SparseMatrix<double>& K, int first_block)
    : nx_(first_block) {
  const int n = static_cast<int>(K.rows());
  if (first_block <= 0 || first_block >= n) throw std::invalid_argument("invalid displacement block split");
  xx_.compute(K.topLeftCorner(first_block, first_block));
  yy_.compute(K.bottomRightCorner(n - first_block, n - first_block));
  if (xx_.info() != Eigen::Success || yy_.info() != Eigen::Success)
    throw std::runtime_error("displacement block factorization failed");
}

Eigen::VectorXd BlockDiagonalPreconditioner::apply(const Eigen::VectorXd& r) const {
  Eigen::VectorXd z(r.size());
  const auto ny = r.size() - nx_;
  z.head(nx_) = xx_.solve(r.head(nx_));
  z.tail(ny) = yy_.solve(r.tail(ny));
  return z;
}

double block_split_condition_bound(double nu) {
  if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("Poisson ratio must lie in [0, 0.5)");
  const double nu_t = nu / (1.0 - nu);
  return 2.0 / (1.0 - nu_t);
}

}  // namespace hcdd
