#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <optional>
#include <ostream>
#include <vector>

namespace hcdd {

/// Action of M^{-1} on a residual. Implementations are immutable after
/// construction and may be shared between solves.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual Eigen::VectorXd apply(const Eigen::VectorXd& r) const = 0;
  virtual int coarse_dim() const { return 0; }
};

class IdentityPreconditioner final : public Preconditioner {
 public:
  Eigen::VectorXd apply(const Eigen::VectorXd& r) const override { return r; }
};

/// M^{-1} = A^{-1} through a sparse LDL^T factorization.
class ExactPreconditioner final : public Preconditioner {
 public:
  explicit ExactPreconditioner(const Eigen::SparseMatrix<double>& A);
  Eigen::VectorXd apply(const Eigen::VectorXd& r) const override { return solver_.solve(r); }

 private:
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

/// Direct sparse solve, the reference against which iterative solutions are checked.
Eigen::VectorXd solve_direct(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b);

struct PcgOptions {
  double tol = 1e-6;
  int max_iterations = 2000;
  bool check_symmetry = false;
  /// Record the Lanczos condition estimate after every iteration (quadratic cost).
  bool track_condition = false;
};

struct PhaseTimes {
  double level1 = 0.0;
  double coarse = 0.0;
  double solve = 0.0;
};

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;  // ||r_k|| / ||r_0||, entry 0 is 1
  std::vector<double> lanczos_diag;
  std::vector<double> lanczos_offdiag;
  std::optional<double> condition;
  double ritz_min = 0.0;
  double ritz_max = 0.0;
  std::vector<double> condition_history;
  int coarse_dim = 0;
  PhaseTimes times;
};

struct PcgResult {
  Eigen::VectorXd x;
  SolveReport report;
};

/// Preconditioned CG from x0 = 0, stopping on the true-residual 2-norm
/// reduction ||b - A x|| <= tol ||b||.
PcgResult pcg_solve(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b, const Preconditioner& M,
                    const PcgOptions& options = {});

/// Extreme eigenvalues of the Lanczos tridiagonal accumulated by PCG.
std::optional<std::pair<double, double>> ritz_extremes(const std::vector<double>& diag,
                                                       const std::vector<double>& offdiag);

/// lambda_max / lambda_min of the recorded tridiagonal, absent before the
/// first iteration.
std::optional<double> estimate_condition(const SolveReport& report);

/// CSV with header `iteration,relative_residual`.
void write_residual_history_csv(const SolveReport& report, std::ostream& out);

}  // namespace hcdd
