#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace hcdd {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform lattice of square Q1 elements with lower-left corner at the origin.
///
/// Nodes are numbered row by row, `node = j * (nx + 1) + i`, and elements the
/// same way, `element = j * nx + i`. With `nx == ny` the mesh covers the unit
/// square.
struct FineMesh {
  int nx = 0;
  int ny = 0;
  double h = 0.0;

  int num_nodes() const { return (nx + 1) * (ny + 1); }
  int num_elements() const { return nx * ny; }
  int num_displacement_dofs() const { return 2 * num_nodes(); }

  int node(int i, int j) const { return j * (nx + 1) + i; }
  int element(int i, int j) const { return j * nx + i; }
  int node_i(int n) const { return n % (nx + 1); }
  int node_j(int n) const { return n / (nx + 1); }
  int element_i(int e) const { return e % nx; }
  int element_j(int e) const { return e / nx; }

  Point node_coord(int n) const { return {node_i(n) * h, node_j(n) * h}; }
  Point element_centroid(int e) const {
    return {(element_i(e) + 0.5) * h, (element_j(e) + 0.5) * h};
  }

  // Counter-clockwise from the lower-left corner.
  std::array<int, 4> element_nodes(int e) const {
    const int i = element_i(e);
    const int j = element_j(e);
    return {node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
  }

  bool on_boundary(int n) const {
    const int i = node_i(n);
    const int j = node_j(n);
    return i == 0 || j == 0 || i == nx || j == ny;
  }
};

FineMesh build_fine_mesh(int nx, int ny);

/// Support of the coarse basis functions attached to one interior coarse node.
///
/// Element range is half-open in fine element indices: `[i0, i1) x [j0, j1)`;
/// the node box is closed: `[i0, i1] x [j0, j1]`.
struct Neighborhood {
  int coarse_i = 0;
  int coarse_j = 0;
  Point center;
  int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
  std::vector<int> elements;

  int box_width() const { return i1 - i0 + 1; }
  int box_height() const { return j1 - j0 + 1; }
  int num_box_nodes() const { return box_width() * box_height(); }
  bool contains_node(int i, int j) const { return i >= i0 && i <= i1 && j >= j0 && j <= j1; }
  bool node_strictly_inside(int i, int j) const { return i > i0 && i < i1 && j > j0 && j < j1; }
  int box_index(int i, int j) const { return (j - j0) * box_width() + (i - i0); }
};

struct CoarsePartition {
  FineMesh mesh;
  int Nx = 0;
  int Ny = 0;
  int block_nx = 0;  // fine elements per block along x
  int block_ny = 0;
  std::vector<std::vector<int>> blocks;     // D_i, row-major over (I, J)
  std::vector<Neighborhood> neighborhoods;  // omega_j = D'_j, interior coarse nodes only

  double H() const { return block_nx * mesh.h; }
  int block_of_element(int e) const {
    return (mesh.element_j(e) / block_ny) * Nx + mesh.element_i(e) / block_nx;
  }
};

CoarsePartition build_coarse_partition(const FineMesh& mesh, int Nx, int Ny);

/// Bilinear coarse hat functions of the interior coarse nodes, sampled at the
/// fine nodes of each neighborhood box.
///
/// Hats of coarse nodes on the domain boundary are folded into the adjacent
/// interior node along each axis, so the functions sum to one at every fine
/// node of the mesh.
struct PartitionOfUnity {
  std::vector<std::vector<double>> values;  // per neighborhood, indexed by box node

  double value(const CoarsePartition& part, int nbhd, int fine_node) const;
};

PartitionOfUnity build_partition_of_unity(const CoarsePartition& part);

}  // namespace hcdd
