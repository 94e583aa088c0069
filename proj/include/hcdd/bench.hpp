#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hcdd/assembly.hpp"
#include "hcdd/grid.hpp"
#include "hcdd/krylov.hpp"
#include "hcdd/schwarz.hpp"

namespace hcdd {

/// Bumped whenever the synthetic geometry changes; acceptance numbers depend on it.
inline constexpr int kLayoutVersion = 1;

/// Half-open fine element range [i0, i1) x [j0, j1).
struct ElementRect {
  int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
  bool contains(int i, int j) const { return i >= i0 && i < i1 && j >= j0 && j < j1; }
};

struct SyntheticLayout {
  std::string tag;
  std::vector<ElementRect> channels;
  std::vector<ElementRect> inclusions;
};

/// Tags: "channels-and-inclusions", "inclusions-only", "homogeneous".
/// Inclusions are centered in coarse blocks of the given Nx x Ny partition.
SyntheticLayout synthetic_layout(std::string_view tag, const FineMesh& mesh, int Nx, int Ny);

/// E_max = 1 on channels and inclusions, E_min = 1/contrast elsewhere.
CoefficientField generate_coefficient(std::string_view tag, const FineMesh& mesh, double contrast, int Nx = 10,
                                      int Ny = 10, double nu = 0.3);

/// Element with modulus E_max whose centroid is closest to `p`, ignoring
/// elements that touch the boundary. Ties go to the lower index.
int nearest_solid_element(const FineMesh& mesh, const CoefficientField& coeff, Point p);

/// (+F, 0) near (0.2, 0.2) and (-F, 0) near (0.8, 0.8), each on a solid element.
LoadSpec opposing_forces(const FineMesh& mesh, const CoefficientField& coeff, double F = 1.0);

struct BenchmarkConfig {
  int nx = 100, ny = 100;
  int Nx = 10, Ny = 10;
  std::string layout = "channels-and-inclusions";
  std::vector<double> contrasts{1.0, 1e2, 1e4, 1e6};
  std::vector<Variant> variants{Variant::EE,     Variant::HH,          Variant::HH_Rot, Variant::EH,
                                Variant::EH_Rot, Variant::EH_Rot_Rand, Variant::EE_Rand};
  bool include_none = true;
  EigOptions eig;
  double nu = 0.3;
  double force = 1.0;
  double tol = 1e-6;
  int maxit = 2000;
  bool check_direct = false;
  int jobs = 1;
  std::filesystem::path output_dir;

  void validate() const;
};

/// Everything that depends on a single contrast value.
struct BenchmarkProblem {
  FineMesh mesh;
  CoarsePartition part;
  PartitionOfUnity pou;
  CoefficientField coeff;
  SymmetricSparseOperator K;
  Eigen::VectorXd f;
};

BenchmarkProblem make_benchmark_problem(const BenchmarkConfig& cfg, double contrast);
BenchmarkProblem make_problem(const FineMesh& mesh, int Nx, int Ny, CoefficientField coeff, const LoadSpec& load);

struct CaseResult {
  Variant variant = Variant::none;
  double contrast = 1.0;
  SolveReport report;
  int coarse_dim = 0;
  std::string selection;
  PhaseTimes times;
  std::optional<double> direct_error;  // ||u - u_direct|| / ||u_direct||
};

CaseResult solve_case(const BenchmarkProblem& prob, Variant variant, const BenchmarkConfig& cfg,
                      const Eigen::VectorXd* direct = nullptr);

/// All (contrast, variant) cells, contrast-major. Writes CSVs when an output
/// directory is configured.
std::vector<CaseResult> run_benchmark(const BenchmarkConfig& cfg);

/// "1", "1e2", "1e4", ... for powers of ten, shortest round-trip form otherwise.
std::string format_contrast(double eta);
/// Iteration count, or ">maxit" when the solve did not converge.
std::string format_iterations(const CaseResult& r, int maxit);
std::string format_condition(const std::optional<double>& c);

void write_benchmark_tables(const BenchmarkConfig& cfg, const std::vector<CaseResult>& results);

}  // namespace hcdd
