#include "hcdd/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hcdd {

namespace {

constexpr std::array<double, 4> kXiNode = {-1.0, 1.0, 1.0, -1.0};
constexpr std::array<double, 4> kEtaNode = {-1.0, -1.0, 1.0, 1.0};

struct ShapeGradients {
  std::array<double, 4> dx;
  std::array<double, 4> dy;
  std::array<double, 4> n;
};

// Gauss point (xi, eta) of the reference square mapped onto a square of side h.
ShapeGradients shape_at(double xi, double eta, double h) {
  ShapeGradients g{};
  const double inv_jac = 2.0 / h;
  for (int a = 0; a < 4; ++a) {
    g.n[a] = 0.25 * (1.0 + xi * kXiNode[a]) * (1.0 + eta * kEtaNode[a]);
    g.dx[a] = 0.25 * kXiNode[a] * (1.0 + eta * kEtaNode[a]) * inv_jac;
    g.dy[a] = 0.25 * kEtaNode[a] * (1.0 + xi * kXiNode[a]) * inv_jac;
  }
  return g;
}

template <class Fn>
void for_each_gauss_point(Fn&& fn) {
  const double g = 1.0 / std::sqrt(3.0);
  for (double eta : {-g, g})
    for (double xi : {-g, g}) fn(xi, eta);
}

template <int N>
void mirror_upper(Eigen::Matrix<double, N, N>& m) {
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < i; ++j) m(i, j) = m(j, i);
}

ElasticElementMatrix unit_elastic_stiffness(double nu, double h) {
  Eigen::Matrix3d D;
  const double c = 1.0 / (1.0 - nu * nu);
  D << c, c * nu, 0.0, c * nu, c, 0.0, 0.0, 0.0, c * (1.0 - nu) / 2.0;
  ElasticElementMatrix k = ElasticElementMatrix::Zero();
  const double w = (h / 2.0) * (h / 2.0);
  for_each_gauss_point([&](double xi, double eta) {
    const auto s = shape_at(xi, eta, h);
    Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
    for (int a = 0; a < 4; ++a) {
      B(0, 2 * a) = s.dx[a];
      B(1, 2 * a + 1) = s.dy[a];
      B(2, 2 * a) = s.dy[a];
      B(2, 2 * a + 1) = s.dx[a];
    }
    k.noalias() += w * B.transpose() * D * B;
  });
  mirror_upper(k);
  return k;
}

ScalarElementMatrix unit_scalar_stiffness(double h) {
  ScalarElementMatrix k = ScalarElementMatrix::Zero();
  const double w = (h / 2.0) * (h / 2.0);
  for_each_gauss_point([&](double xi, double eta) {
    const auto s = shape_at(xi, eta, h);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) k(a, b) += w * (s.dx[a] * s.dx[b] + s.dy[a] * s.dy[b]);
  });
  mirror_upper(k);
  return k;
}

ScalarElementMatrix unit_mass(double h) {
  ScalarElementMatrix m = ScalarElementMatrix::Zero();
  const double w = (h / 2.0) * (h / 2.0);
  for_each_gauss_point([&](double xi, double eta) {
    const auto s = shape_at(xi, eta, h);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) m(a, b) += w * s.n[a] * s.n[b];
  });
  mirror_upper(m);
  return m;
}

}  // namespace

ElasticElementMatrix element_stiffness_elasticity(double modulus, double nu, double h) {
  if (!(modulus > 0.0)) throw std::invalid_argument("element modulus must be positive");
  if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("Poisson ratio must lie in [0, 0.5)");
  if (!(h > 0.0)) throw std::invalid_argument("element size must be positive");
  return modulus * unit_elastic_stiffness(nu, h);
}

ScalarElementMatrix element_stiffness_diffusion(double kappa, double h) {
  if (!(kappa > 0.0)) throw std::invalid_argument("diffusion coefficient must be positive");
  return kappa * unit_scalar_stiffness(h);
}

ScalarElementMatrix element_mass(double weight, double h) {
  if (!(weight > 0.0)) throw std::invalid_argument("mass weight must be positive");
  return weight * unit_mass(h);
}

void CoefficientField::validate(int num_elements) const {
  if (static_cast<int>(modulus.size()) != num_elements)
    throw std::invalid_argument("coefficient field has " + std::to_string(modulus.size()) +
                                " entries, mesh has " + std::to_string(num_elements) + " elements");
  if (!(E_min > 0.0) || E_max < E_min) throw std::invalid_argument("need 0 < E_min <= E_max");
  if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("Poisson ratio must lie in [0, 0.5)");
  for (double E : modulus)
    if (!(E >= E_min && E <= E_max))
      throw std::invalid_argument("modulus " + std::to_string(E) + " outside [E_min, E_max]");
}

CoefficientField homogeneous_field(const FineMesh& mesh, double modulus, double nu) {
  CoefficientField c;
  c.modulus.assign(static_cast<std::size_t>(mesh.num_elements()), modulus);
  c.nu = nu;
  c.E_min = modulus;
  c.E_max = modulus;
  return c;
}

int DofMap::first_block_size() const {
  int n = 0;
  for (int node = 0; node < num_nodes; ++node) n += is_free(node, 0) ? 1 : 0;
  return n;
}

DofMap make_dof_map(const FineMesh& mesh, int components, std::span<const int> dirichlet_raw) {
  DofMap map;
  map.components = components;
  map.num_nodes = mesh.num_nodes();
  std::vector<char> fixed(static_cast<std::size_t>(map.num_raw()), 0);
  for (int d : dirichlet_raw) {
    if (d < 0 || d >= map.num_raw()) throw std::invalid_argument("Dirichlet dof out of range");
    fixed[d] = 1;
  }
  map.raw_to_free.assign(fixed.size(), -1);
  for (int d = 0; d < map.num_raw(); ++d) {
    if (fixed[d]) continue;
    map.raw_to_free[d] = static_cast<int>(map.free_to_raw.size());
    map.free_to_raw.push_back(d);
  }
  if (map.free_to_raw.empty()) throw std::invalid_argument("every dof is constrained");
  return map;
}

std::vector<int> boundary_dirichlet(const FineMesh& mesh, int components) {
  std::vector<int> out;
  for (int c = 0; c < components; ++c)
    for (int n = 0; n < mesh.num_nodes(); ++n)
      if (mesh.on_boundary(n)) out.push_back(c * mesh.num_nodes() + n);
  return out;
}

Eigen::SparseMatrix<double> assemble_form(const FineMesh& mesh, FormKind form,
                                          std::span<const double> weight, double nu,
                                          std::span<const int> elements,
                                          const std::function<int(int, int)>& dof_index, int dim) {
  const bool vector_valued = form == FormKind::elasticity_stiffness || form == FormKind::elasticity_mass;
  const int components = vector_valued ? 2 : 1;

  ElasticElementMatrix k8 = ElasticElementMatrix::Zero();
  ScalarElementMatrix k4 = ScalarElementMatrix::Zero();
  switch (form) {
    case FormKind::elasticity_stiffness:
      if (!(nu >= 0.0 && nu < 0.5)) throw std::invalid_argument("Poisson ratio must lie in [0, 0.5)");
      k8 = unit_elastic_stiffness(nu, mesh.h);
      break;
    case FormKind::elasticity_mass: {
      const ScalarElementMatrix m = unit_mass(mesh.h);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          k8(2 * a, 2 * b) = m(a, b);
          k8(2 * a + 1, 2 * b + 1) = m(a, b);
        }
      break;
    }
    case FormKind::diffusion_stiffness:
      k4 = unit_scalar_stiffness(mesh.h);
      break;
    case FormKind::diffusion_mass:
      k4 = unit_mass(mesh.h);
      break;
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(elements.size() * (vector_valued ? 64 : 16));
  std::array<int, 8> rows{};
  for (int e : elements) {
    const double w = weight[e];
    if (!(w > 0.0)) throw std::invalid_argument("element weight must be positive");
    const auto nodes = mesh.element_nodes(e);
    for (int a = 0; a < 4; ++a)
      for (int c = 0; c < components; ++c) rows[components * a + c] = dof_index(nodes[a], c);
    const int n = 4 * components;
    for (int p = 0; p < n; ++p) {
      if (rows[p] < 0) continue;
      for (int q = 0; q < n; ++q) {
        if (rows[q] < 0) continue;
        const double v = vector_valued ? k8(p, q) : k4(p, q);
        if (v != 0.0) triplets.emplace_back(rows[p], rows[q], w * v);
      }
    }
  }
  Eigen::SparseMatrix<double> A(dim, dim);
  A.setFromTriplets(triplets.begin(), triplets.end());
  A.makeCompressed();
  return A;
}

namespace {

std::vector<int> all_elements(const FineMesh& mesh) {
  std::vector<int> e(static_cast<std::size_t>(mesh.num_elements()));
  for (int i = 0; i < mesh.num_elements(); ++i) e[i] = i;
  return e;
}

SymmetricSparseOperator assemble_global(const FineMesh& mesh, FormKind form, std::span<const double> weight,
                                        double nu, int components, std::span<const int> dirichlet_raw) {
  if (static_cast<int>(weight.size()) != mesh.num_elements())
    throw std::invalid_argument("per-element weight has wrong length");
  SymmetricSparseOperator op;
  op.dofs = make_dof_map(mesh, components, dirichlet_raw);
  const auto elements = all_elements(mesh);
  const DofMap& dofs = op.dofs;
  op.matrix = assemble_form(
      mesh, form, weight, nu, elements, [&dofs](int node, int c) { return dofs.free_index(node, c); },
      dofs.num_free());
  return op;
}

}  // namespace

SymmetricSparseOperator assemble_elasticity(const FineMesh& mesh, const CoefficientField& coeff,
                                            std::span<const int> dirichlet_raw) {
  coeff.validate(mesh.num_elements());
  return assemble_global(mesh, FormKind::elasticity_stiffness, coeff.modulus, coeff.nu, 2, dirichlet_raw);
}

SymmetricSparseOperator assemble_diffusion(const FineMesh& mesh, std::span<const double> kappa,
                                           std::span<const int> dirichlet_raw) {
  for (double k : kappa)
    if (!(k > 0.0)) throw std::invalid_argument("diffusion coefficient must be positive");
  return assemble_global(mesh, FormKind::diffusion_stiffness, kappa, 0.0, 1, dirichlet_raw);
}

SymmetricSparseOperator assemble_weighted_mass(const FineMesh& mesh, std::span<const double> weight,
                                               MassKind kind, std::span<const int> dirichlet_raw) {
  if (kind == MassKind::elasticity)
    return assemble_global(mesh, FormKind::elasticity_mass, weight, 0.0, 2, dirichlet_raw);
  return assemble_global(mesh, FormKind::diffusion_mass, weight, 0.0, 1, dirichlet_raw);
}

void LoadSpec::add_element_force(const FineMesh& mesh, int e, double fx, double fy) {
  for (int n : mesh.element_nodes(e)) {
    if (fx != 0.0) point_loads.push_back({n, 0, 0.25 * fx});
    if (fy != 0.0) point_loads.push_back({n, 1, 0.25 * fy});
  }
}

Eigen::VectorXd assemble_load(const FineMesh& mesh, const LoadSpec& load, const DofMap& dofs) {
  if (dofs.components != 2) throw std::invalid_argument("loads need a displacement dof map");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(dofs.num_free());
  for (const auto& pl : load.point_loads) {
    if (pl.node < 0 || pl.node >= mesh.num_nodes() || pl.component < 0 || pl.component > 1)
      throw std::invalid_argument("point load references an invalid dof");
    const int d = dofs.free_index(pl.node, pl.component);
    if (d < 0) throw std::invalid_argument("point load applied to a constrained dof");
    f[d] += pl.magnitude;
  }
  if (!load.body_force.empty()) {
    if (static_cast<int>(load.body_force.size()) != mesh.num_elements())
      throw std::invalid_argument("body force needs one entry per element");
    const double share = 0.25 * mesh.h * mesh.h;
    for (int e = 0; e < mesh.num_elements(); ++e)
      for (int n : mesh.element_nodes(e))
        for (int c = 0; c < 2; ++c) {
          const int d = dofs.free_index(n, c);
          if (d >= 0) f[d] += share * load.body_force[e][c];
        }
  }
  return f;
}

double simp_modulus(double rho, double p, double E_min, double E_max) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("density outside [0, 1]");
  if (!(p >= 1.0)) throw std::invalid_argument("SIMP exponent must be >= 1");
  return E_min + std::pow(rho, p) * (E_max - E_min);
}

DensityFilter::DensityFilter(const FineMesh& mesh, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("filter radius must be non-negative");
  const int reach = static_cast<int>(std::ceil(radius / mesh.h));
  const int n = mesh.num_elements();
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<std::pair<int, double>> row;
  for (int e = 0; e < n; ++e) {
    const int ie = mesh.element_i(e);
    const int je = mesh.element_j(e);
    row.clear();
    double sum = 0.0;
    for (int j = std::max(0, je - reach); j <= std::min(mesh.ny - 1, je + reach); ++j)
      for (int i = std::max(0, ie - reach); i <= std::min(mesh.nx - 1, ie + reach); ++i) {
        const double dist = mesh.h * std::hypot(i - ie, j - je);
        const double w = std::max(0.0, radius - dist);
        if (w > 0.0) {
          row.emplace_back(mesh.element(i, j), w);
          sum += w;
        }
      }
    if (row.empty()) {
      triplets.emplace_back(e, e, 1.0);
      continue;
    }
    for (auto [k, w] : row) triplets.emplace_back(e, k, w / sum);
  }
  weights_.resize(n, n);
  weights_.setFromTriplets(triplets.begin(), triplets.end());
  weights_.makeCompressed();
}

Eigen::VectorXd density_filter(const FineMesh& mesh, const Eigen::VectorXd& rho, double radius) {
  return DensityFilter(mesh, radius).apply(rho);
}

}  // namespace hcdd
