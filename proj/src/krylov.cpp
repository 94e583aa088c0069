#include "hcdd/krylov.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace hcdd {

ExactPreconditioner::ExactPreconditioner(const Eigen::SparseMatrix<double>& A) : solver_(A) {
  if (solver_.info() != Eigen::Success) throw std::runtime_error("sparse factorization failed");
}

Eigen::VectorXd solve_direct(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success) throw std::runtime_error("sparse factorization failed");
  return solver.solve(b);
}

std::optional<std::pair<double, double>> ritz_extremes(const std::vector<double>& diag,
                                                       const std::vector<double>& offdiag) {
  const auto n = static_cast<Eigen::Index>(diag.size());
  if (n == 0) return std::nullopt;
  if (n == 1) return std::make_pair(diag[0], diag[0]);
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(diag.data(), n);
  Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(offdiag.data(), n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return std::nullopt;
  return std::make_pair(es.eigenvalues()[0], es.eigenvalues()[n - 1]);
}

std::optional<double> estimate_condition(const SolveReport& report) {
  const auto ext = ritz_extremes(report.lanczos_diag, report.lanczos_offdiag);
  if (!ext || ext->first <= 0.0) return std::nullopt;
  return ext->second / ext->first;
}

namespace {

void check_preconditioner_symmetry(const Preconditioner& M, Eigen::Index n) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = dist(rng);
    w[i] = dist(rng);
  }
  const Eigen::VectorXd Mv = M.apply(v);
  const Eigen::VectorXd Mw = M.apply(w);
  const double a = v.dot(Mw);
  const double b = w.dot(Mv);
  const double scale = std::max(v.norm() * Mw.norm(), w.norm() * Mv.norm());
  if (std::abs(a - b) > 1e-10 * scale)
    throw std::runtime_error("preconditioner is not symmetric: v'Mw = " + std::to_string(a) +
                             ", w'Mv = " + std::to_string(b));
}

void fill_tridiagonal(SolveReport& rep, const std::vector<double>& alpha, const std::vector<double>& beta,
                      std::size_t k) {
  rep.lanczos_diag.resize(k);
  rep.lanczos_offdiag.resize(k > 0 ? k - 1 : 0);
  for (std::size_t j = 0; j < k; ++j) {
    rep.lanczos_diag[j] = 1.0 / alpha[j] + (j > 0 ? beta[j - 1] / alpha[j - 1] : 0.0);
    if (j + 1 < k) rep.lanczos_offdiag[j] = std::sqrt(beta[j]) / alpha[j];
  }
}

}  // namespace

PcgResult pcg_solve(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b, const Preconditioner& M,
                    const PcgOptions& options) {
  if (A.rows() != A.cols() || A.rows() != b.size()) throw std::invalid_argument("PCG dimension mismatch");
  if (!(options.tol > 0.0 && options.tol < 1.0)) throw std::invalid_argument("PCG tolerance must lie in (0, 1)");
  const auto t0 = std::chrono::steady_clock::now();

  PcgResult out;
  SolveReport& rep = out.report;
  rep.coarse_dim = M.coarse_dim();
  out.x = Eigen::VectorXd::Zero(b.size());
  const double bnorm = b.norm();
  rep.residual_history.push_back(1.0);
  if (bnorm == 0.0) {
    rep.converged = true;
    return out;
  }
  if (options.check_symmetry) check_preconditioner_symmetry(M, b.size());

  Eigen::VectorXd r = b;
  Eigen::VectorXd z = M.apply(r);
  if (z.size() != r.size()) throw std::invalid_argument("preconditioner output has the wrong dimension");
  Eigen::VectorXd p = z;
  Eigen::VectorXd q(b.size());
  double rz = r.dot(z);
  std::vector<double> alpha, beta;

  for (int k = 0; k < options.max_iterations; ++k) {
    q.noalias() = A * p;
    const double pq = p.dot(q);
    if (!(pq > 0.0) || !(rz > 0.0)) throw std::runtime_error("PCG breakdown: operator or preconditioner not SPD");
    const double a = rz / pq;
    alpha.push_back(a);
    out.x += a * p;
    r -= a * q;
    rep.iterations = k + 1;
    double rel = r.norm() / bnorm;
    if (rel <= options.tol) {
      Eigen::VectorXd true_r = b - A * out.x;
      const double true_rel = true_r.norm() / bnorm;
      if (true_rel <= options.tol) {
        rep.residual_history.push_back(true_rel);
        rep.converged = true;
        break;
      }
      r = std::move(true_r);
      rel = true_rel;
    }
    rep.residual_history.push_back(rel);
    z = M.apply(r);
    const double rz_new = r.dot(z);
    const double bt = rz_new / rz;
    beta.push_back(bt);
    p = z + bt * p;
    rz = rz_new;
    if (options.track_condition) {
      fill_tridiagonal(rep, alpha, beta, alpha.size());
      const auto c = estimate_condition(rep);
      rep.condition_history.push_back(c.value_or(1.0));
    }
  }

  fill_tridiagonal(rep, alpha, beta, alpha.size());
  if (const auto ext = ritz_extremes(rep.lanczos_diag, rep.lanczos_offdiag)) {
    rep.ritz_min = ext->first;
    rep.ritz_max = ext->second;
  }
  rep.condition = estimate_condition(rep);
  if (options.track_condition && rep.converged) rep.condition_history.push_back(rep.condition.value_or(1.0));
  rep.times.solve = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void write_residual_history_csv(const SolveReport& report, std::ostream& out) {
  out << "iteration,relative_residual\n";
  out.precision(17);
  for (std::size_t i = 0; i < report.residual_history.size(); ++i)
    out << i << ',' << report.residual_history[i] << '\n';
}

}  // namespace hcdd
