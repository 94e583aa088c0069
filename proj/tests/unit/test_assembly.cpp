#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "hcdd/assembly.hpp"

using namespace hcdd;

namespace {

// Closed-form plane-stress Q1 stiffness for E = 1 on a square, nodes ccw from
// the lower left, dofs interleaved.
ElasticElementMatrix reference_stiffness(double nu) {
  const double k[8] = {0.5 - nu / 6,  0.125 + nu / 8, -0.25 - nu / 12, -0.125 + 3 * nu / 8,
                       -0.25 + nu / 12, -0.125 - nu / 8, nu / 6,         0.125 - 3 * nu / 8};
  const int idx[8][8] = {{0, 1, 2, 3, 4, 5, 6, 7}, {1, 0, 7, 6, 5, 4, 3, 2}, {2, 7, 0, 5, 6, 3, 4, 1},
                         {3, 6, 5, 0, 7, 2, 1, 4}, {4, 5, 6, 7, 0, 1, 2, 3}, {5, 4, 3, 2, 1, 0, 7, 6},
                         {6, 3, 4, 1, 2, 7, 0, 5}, {7, 2, 1, 4, 3, 6, 5, 0}};
  ElasticElementMatrix K;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) K(i, j) = k[idx[i][j]] / (1 - nu * nu);
  return K;
}

CoefficientField random_field(const FineMesh& m, std::uint64_t seed, double nu) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-6.0, 0.0);
  CoefficientField c;
  c.nu = nu;
  c.E_min = 1e-6;
  c.E_max = 1.0;
  for (int e = 0; e < m.num_elements(); ++e) c.modulus.push_back(std::pow(10.0, u(rng)));
  return c;
}

}  // namespace

TEST_CASE("elasticity element matrix") {
  for (double nu : {0.0, 0.3, 0.45}) {
    const auto K = element_stiffness_elasticity(1.0, nu, 0.1);
    CHECK((K - reference_stiffness(nu)).cwiseAbs().maxCoeff() < 1e-14);
  }
  const auto K1 = element_stiffness_elasticity(2.5, 0.3, 0.1);
  const auto K2 = element_stiffness_elasticity(2.5, 0.3, 7.0);
  CHECK((K1 - K2).norm() < 1e-13);  // scale invariant in 2D
  CHECK((K1 - 2.5 * reference_stiffness(0.3)).norm() < 1e-13);

  // Rigid body modes: two translations and the rotation about the centroid.
  const double h = 0.1;
  const double xy[4][2] = {{-h / 2, -h / 2}, {h / 2, -h / 2}, {h / 2, h / 2}, {-h / 2, h / 2}};
  Eigen::Matrix<double, 8, 3> R;
  for (int a = 0; a < 4; ++a) {
    R.row(2 * a) << 1, 0, -xy[a][1];
    R.row(2 * a + 1) << 0, 1, xy[a][0];
  }
  CHECK((K1 * R).norm() < 1e-13);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> es(K1);
  CHECK(es.eigenvalues()[2] < 1e-12);
  CHECK(es.eigenvalues()[3] > 0.1);

  CHECK_THROWS(element_stiffness_elasticity(0.0, 0.3, 0.1));
  CHECK_THROWS(element_stiffness_elasticity(1.0, 0.5, 0.1));
  CHECK_THROWS(element_stiffness_elasticity(1.0, 0.3, 0.0));
}

TEST_CASE("scalar element matrices") {
  Eigen::Matrix4d D;
  D << 4, -1, -2, -1, -1, 4, -1, -2, -2, -1, 4, -1, -1, -2, -1, 4;
  D /= 6.0;
  Eigen::Matrix4d M;
  M << 4, 2, 1, 2, 2, 4, 2, 1, 1, 2, 4, 2, 2, 1, 2, 4;
  const double h = 0.2;
  M *= h * h / 36.0;
  CHECK((element_stiffness_diffusion(3.0, h) - 3.0 * D).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((element_mass(2.0, h) - 2.0 * M).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(element_mass(1.0, h).sum() == doctest::Approx(h * h));
}

TEST_CASE("five-point-like diagonal of the assembled Laplacian") {
  // Centre node of a 2x2 mesh with the boundary eliminated: 4 elements x 4/6.
  const auto m = build_fine_mesh(2, 2);
  const std::vector<double> kappa(4, 1.0);
  const auto op = assemble_diffusion(m, kappa, boundary_dirichlet(m, 1));
  REQUIRE(op.dimension() == 1);
  CHECK(op.matrix.coeff(0, 0) == doctest::Approx(8.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("dof map is component grouped") {
  const auto m = build_fine_mesh(3, 3);
  const auto dofs = make_dof_map(m, 2, boundary_dirichlet(m, 2));
  CHECK(dofs.num_raw() == 32);
  CHECK(dofs.num_free() == 8);
  CHECK(dofs.first_block_size() == 4);
  for (int f = 0; f < dofs.num_free(); ++f) CHECK(dofs.raw_to_free[dofs.free_to_raw[f]] == f);
  CHECK(dofs.free_index(m.node(1, 1), 0) == 0);
  CHECK(dofs.free_index(m.node(1, 1), 1) == 4);
  CHECK_FALSE(dofs.is_free(m.node(0, 1), 1));
  std::vector<int> all(32);
  for (int i = 0; i < 32; ++i) all[i] = i;
  CHECK_THROWS(make_dof_map(m, 2, all));
}

TEST_CASE("global elasticity operator") {
  const auto m = build_fine_mesh(6, 5);
  const auto c = random_field(m, 3, 0.3);

  SUBCASE("symmetric with rigid body kernel when nothing is constrained") {
    const auto op = assemble_elasticity(m, c, {});
    CHECK((Eigen::MatrixXd(op.matrix) - Eigen::MatrixXd(op.matrix).transpose()).norm() < 1e-14);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(op.dimension(), 3);
    for (int n = 0; n < m.num_nodes(); ++n) {
      const Point p = m.node_coord(n);
      R(op.dofs.free_index(n, 0), 0) = 1;
      R(op.dofs.free_index(n, 1), 1) = 1;
      R(op.dofs.free_index(n, 0), 2) = -p.y;
      R(op.dofs.free_index(n, 1), 2) = p.x;
    }
    CHECK((op.matrix * R).norm() < 1e-12);
  }

  SUBCASE("positive definite with the boundary clamped") {
    const auto op = assemble_elasticity(m, c, boundary_dirichlet(m, 2));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(op.matrix)};
    CHECK(es.eigenvalues()[0] > 0.0);
  }

  SUBCASE("assembly is bit reproducible") {
    const auto a = assemble_elasticity(m, c, boundary_dirichlet(m, 2));
    const auto b = assemble_elasticity(m, c, boundary_dirichlet(m, 2));
    CHECK((Eigen::MatrixXd(a.matrix) - Eigen::MatrixXd(b.matrix)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("y block equals the x block of the transposed field") {
  // Reflection across the diagonal swaps the roles of x and y; on a square
  // mesh K_yy(E) = P K_xx(E^T) P^T with P the node reflection.
  const auto m = build_fine_mesh(7, 7);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto c = random_field(m, seed, 0.3);
    auto ct = c;
    for (int j = 0; j < m.ny; ++j)
      for (int i = 0; i < m.nx; ++i) ct.modulus[m.element(j, i)] = c.modulus[m.element(i, j)];
    const auto op = assemble_elasticity(m, c, boundary_dirichlet(m, 2));
    const auto opt = assemble_elasticity(m, ct, boundary_dirichlet(m, 2));
    const int nb = op.dofs.first_block_size();
    const Eigen::MatrixXd Kyy = Eigen::MatrixXd(op.matrix).bottomRightCorner(nb, nb);
    const Eigen::MatrixXd Kxx_t = Eigen::MatrixXd(opt.matrix).topLeftCorner(nb, nb);
    Eigen::MatrixXd reflected(nb, nb);
    for (int a = 0; a < nb; ++a)
      for (int b = 0; b < nb; ++b) {
        const int na = op.dofs.free_to_raw[a], nbn = op.dofs.free_to_raw[b];
        const int ra = op.dofs.free_index(m.node(m.node_j(na), m.node_i(na)), 0);
        const int rb = op.dofs.free_index(m.node(m.node_j(nbn), m.node_i(nbn)), 0);
        reflected(a, b) = Kxx_t(ra, rb);
      }
    CHECK((Kyy - reflected).cwiseAbs().maxCoeff() <= 1e-14 * Kyy.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("weighted mass") {
  const auto m = build_fine_mesh(4, 4);
  std::vector<double> w(16);
  for (int e = 0; e < 16; ++e) w[e] = 1.0 + e;
  const auto M = assemble_weighted_mass(m, w, MassKind::diffusion);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(M.dimension());
  double expect = 0.0;
  for (double x : w) expect += x * m.h * m.h;
  CHECK(one.dot(M.matrix * one) == doctest::Approx(expect));
  const auto Me = assemble_weighted_mass(m, w, MassKind::elasticity);
  CHECK(Me.dimension() == 2 * M.dimension());
}

TEST_CASE("load vector") {
  const auto m = build_fine_mesh(4, 4);
  const auto dofs = make_dof_map(m, 2, boundary_dirichlet(m, 2));
  LoadSpec load;
  load.add_element_force(m, m.element(1, 1), 2.0, -1.0);
  const auto f = assemble_load(m, load, dofs);
  // Each of the four nodes carries a quarter.
  CHECK(f.sum() == doctest::Approx(2.0 - 1.0));
  CHECK(f[dofs.free_index(m.node(2, 2), 0)] == doctest::Approx(0.5));

  LoadSpec bad;
  bad.point_loads.push_back({m.node(0, 0), 0, 1.0});
  CHECK_THROWS(assemble_load(m, bad, dofs));

  const auto free = make_dof_map(m, 2, {});
  LoadSpec body;
  body.body_force.assign(16, {1.0, 3.0});
  const auto fb = assemble_load(m, body, free);
  CHECK(fb.head(free.first_block_size()).sum() == doctest::Approx(1.0));
  CHECK(fb.tail(free.num_free() - free.first_block_size()).sum() == doctest::Approx(3.0));
}

TEST_CASE("coefficient validation and SIMP") {
  const auto m = build_fine_mesh(2, 2);
  auto c = homogeneous_field(m, 2.0, 0.3);
  CHECK_NOTHROW(c.validate(4));
  CHECK_THROWS(c.validate(5));
  c.modulus[0] = 10.0;
  CHECK_THROWS(c.validate(4));

  CHECK(simp_modulus(0.0, 3, 1e-9, 1.0) == doctest::Approx(1e-9));
  CHECK(simp_modulus(1.0, 3, 1e-9, 1.0) == doctest::Approx(1.0));
  CHECK(simp_modulus(0.5, 3, 0.0, 8.0) == doctest::Approx(1.0));
  CHECK_THROWS(simp_modulus(1.5, 3, 0.0, 1.0));
}

TEST_CASE("density filter") {
  const auto m = build_fine_mesh(5, 5);
  const double r = 1.5 * m.h;
  const DensityFilter F(m, r);
  const auto& W = F.weights();

  // Peak weight of the centre element: cone weights r - d over self, four
  // edge neighbours and four corner neighbours.
  const double self = r, edge = r - m.h, corner = r - std::sqrt(2.0) * m.h;
  const double peak = self / (self + 4 * edge + 4 * corner);
  const int c = m.element(2, 2);
  CHECK(W.coeff(c, c) == doctest::Approx(peak).epsilon(1e-14));
  CHECK(W.row(c).nonZeros() == 9);

  for (int e = 0; e < m.num_elements(); ++e) CHECK(W.row(e).sum() == doctest::Approx(1.0).epsilon(1e-14));
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(25, 0.3);
  CHECK((F.apply(u) - u).cwiseAbs().maxCoeff() < 1e-15);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(0, 1);
  Eigen::VectorXd a(25), b(25);
  for (int i = 0; i < 25; ++i) {
    a[i] = d(rng);
    b[i] = d(rng);
  }
  CHECK(F.apply(a).dot(b) == doctest::Approx(a.dot(F.apply_transpose(b))));
  CHECK((density_filter(m, a, r) - F.apply(a)).norm() < 1e-15);

  // A radius below one element width leaves the field unchanged.
  const DensityFilter tiny(m, 0.4 * m.h);
  CHECK((tiny.apply(a) - a).norm() < 1e-15);
}
