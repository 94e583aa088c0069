#include "hcdd/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hcdd {

FineMesh build_fine_mesh(int nx, int ny) {
  if (nx < 1 || ny < 1) {
    throw std::invalid_argument("fine mesh needs at least one element per axis, got " +
                                std::to_string(nx) + "x" + std::to_string(ny));
  }
  return FineMesh{nx, ny, 1.0 / nx};
}

CoarsePartition build_coarse_partition(const FineMesh& mesh, int Nx, int Ny) {
  if (Nx < 1 || Ny < 1) throw std::invalid_argument("coarse mesh needs at least one block per axis");
  if (mesh.nx % Nx != 0 || mesh.ny % Ny != 0) {
    throw std::invalid_argument("coarse mesh " + std::to_string(Nx) + "x" + std::to_string(Ny) +
                                " is not nested in fine mesh " + std::to_string(mesh.nx) + "x" +
                                std::to_string(mesh.ny));
  }

  CoarsePartition part;
  part.mesh = mesh;
  part.Nx = Nx;
  part.Ny = Ny;
  part.block_nx = mesh.nx / Nx;
  part.block_ny = mesh.ny / Ny;

  part.blocks.resize(static_cast<std::size_t>(Nx) * Ny);
  for (int e = 0; e < mesh.num_elements(); ++e) part.blocks[part.block_of_element(e)].push_back(e);

  for (int J = 1; J < Ny; ++J) {
    for (int I = 1; I < Nx; ++I) {
      Neighborhood nb;
      nb.coarse_i = I;
      nb.coarse_j = J;
      nb.center = {I * part.block_nx * mesh.h, J * part.block_ny * mesh.h};
      nb.i0 = (I - 1) * part.block_nx;
      nb.i1 = (I + 1) * part.block_nx;
      nb.j0 = (J - 1) * part.block_ny;
      nb.j1 = (J + 1) * part.block_ny;
      for (int j = nb.j0; j < nb.j1; ++j)
        for (int i = nb.i0; i < nb.i1; ++i) nb.elements.push_back(mesh.element(i, j));
      part.neighborhoods.push_back(std::move(nb));
    }
  }
  return part;
}

namespace {

// 1D hat of coarse node `node` (of `num_blocks + 1`) at fine index `t`, with
// the two boundary hats folded into the first and last interior node.
double folded_hat(int node, int num_blocks, int block, int t) {
  auto hat = [&](int k) {
    return std::max(0.0, 1.0 - std::abs(t - k * block) / static_cast<double>(block));
  };
  double v = hat(node);
  if (node == 1) v += hat(0);
  if (node == num_blocks - 1) v += hat(num_blocks);
  return v;
}

}  // namespace

PartitionOfUnity build_partition_of_unity(const CoarsePartition& part) {
  PartitionOfUnity pou;
  pou.values.reserve(part.neighborhoods.size());
  for (const auto& nb : part.neighborhoods) {
    std::vector<double> vals(static_cast<std::size_t>(nb.num_box_nodes()));
    for (int j = nb.j0; j <= nb.j1; ++j) {
      const double wy = folded_hat(nb.coarse_j, part.Ny, part.block_ny, j);
      for (int i = nb.i0; i <= nb.i1; ++i) {
        const double wx = folded_hat(nb.coarse_i, part.Nx, part.block_nx, i);
        vals[nb.box_index(i, j)] = wx * wy;
      }
    }
    pou.values.push_back(std::move(vals));
  }
  return pou;
}

double PartitionOfUnity::value(const CoarsePartition& part, int nbhd, int fine_node) const {
  const auto& nb = part.neighborhoods[nbhd];
  const int i = part.mesh.node_i(fine_node);
  const int j = part.mesh.node_j(fine_node);
  if (!nb.contains_node(i, j)) return 0.0;
  return values[nbhd][nb.box_index(i, j)];
}

}  // namespace hcdd
