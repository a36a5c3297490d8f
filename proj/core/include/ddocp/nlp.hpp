#pragma once

/// \file nlp.hpp
/// Primal-dual interior-point solver for
///
///   min f(w)  s.t.  c(w) = 0,  lower <= w <= upper.
///
/// Newton steps on the barrier KKT system with a sparse LDL^T factorization
/// and inertia correction, fraction-to-the-boundary step rule, and Armijo
/// backtracking on an l1 exact-penalty merit function with a second-order
/// correction.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace ddocp {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct NlpProblem {
  int variables = 0;
  int constraints = 0;

  std::function<double(const Eigen::VectorXd& w)> objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& w)> gradient;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& w)> residuals;  // c(w)
  /// Constraint Jacobian; the sparsity pattern must not depend on w.
  std::function<SparseMatrix(const Eigen::VectorXd& w)> jacobian;
  /// Approximation of the Lagrangian Hessian (both triangles), given the
  /// equality multipliers.  Only the lower triangle is read.
  std::function<SparseMatrix(const Eigen::VectorXd& w, const Eigen::VectorXd& y)> hessian;

  Eigen::VectorXd lower;  // -inf / +inf for free directions
  Eigen::VectorXd upper;
  /// Nominal magnitudes; the solver iterates on w / variable_scale and
  /// c / constraint_scale.  Empty means unit scaling.
  Eigen::VectorXd variable_scale;
  Eigen::VectorXd constraint_scale;

  /// Throws DomainError on inconsistent sizes, missing callbacks or
  /// crossed bounds.
  void validate() const;
};

struct SolverOptions {
  double tolerance = 1e-6;  // scaled inf-norm of the KKT residuals
  int max_iterations = 200;
  double barrier_initial = 1e-1;
  double barrier_reduction = 0.2;
  double barrier_floor = 1e-9;
  double boundary_fraction = 0.995;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double min_step = 1e-12;
  double regularization_floor = 1e-8;  // first primal shift tried on wrong inertia
  double regularization_max = 1e20;
  double constraint_regularization = 1e-9;
  bool second_order_correction = true;
};

enum class SolveStatus { kConverged, kIterationLimit, kLineSearchFailure, kInfeasibleStationary };

std::string to_string(SolveStatus status);

struct KktResiduals {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;

  double max() const;
};

struct Multipliers {
  Eigen::VectorXd equality;   // y, Lagrangian f + y^T c
  Eigen::VectorXd lower;      // z_L >= 0
  Eigen::VectorXd upper;      // z_U >= 0
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  KktResiduals residuals;
  double barrier = 0.0;
  double step = 0.0;
  double regularization = 0.0;
  int backtracks = 0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::kIterationLimit;
  int iterations = 0;
  KktResiduals residuals;
  double objective = 0.0;
  double wall_time = 0.0;  // seconds
  std::vector<IterationRecord> log;
  std::string message;
};

struct SolveResult {
  Eigen::VectorXd w;
  Multipliers multipliers;
  SolveReport report;
};

/// Scaled KKT residuals of the original (mu = 0) problem: stationarity of
/// the Lagrangian divided by the multiplier-size factor
/// s_d = max(1, (|y|_1 + |z|_1) / (100 (m + n))), inf-norm of c / scale,
/// and max z_i * slack_i.
KktResiduals kkt_residuals(const NlpProblem& problem, const Eigen::VectorXd& w,
                           const Multipliers& multipliers);

/// Starting point is moved strictly inside the bounds first.  Never throws
/// for numerical failure; the report carries the status.
SolveResult solve(const NlpProblem& problem, const Eigen::VectorXd& w0,
                  const SolverOptions& options = {});

/// One line per iteration: iter objective stationarity feasibility
/// complementarity step barrier.
void write_iteration_log(std::ostream& os, const SolveReport& report);
void write_iteration_csv(std::ostream& os, const SolveReport& report);

}  // namespace ddocp
