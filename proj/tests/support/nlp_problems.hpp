#pragma once

// Small NLPs with known solutions.

#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>

#include "ddocp/nlp.hpp"

namespace ddocp::testing {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline SparseMatrix dense_to_sparse(const Eigen::MatrixXd& m) { return m.sparseView(0.0, 0.0); }

// min 1/2 |w|^2  s.t.  w1 + w2 = 2
inline NlpProblem equality_qp() {
  NlpProblem p;
  p.variables = 2;
  p.constraints = 1;
  p.objective = [](const Eigen::VectorXd& w) { return 0.5 * w.squaredNorm(); };
  p.gradient = [](const Eigen::VectorXd& w) { return w; };
  p.residuals = [](const Eigen::VectorXd& w) { return Eigen::VectorXd::Constant(1, w.sum() - 2.0); };
  p.jacobian = [](const Eigen::VectorXd&) { return dense_to_sparse(Eigen::MatrixXd::Ones(1, 2)); };
  p.hessian = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return dense_to_sparse(Eigen::MatrixXd::Identity(2, 2)); };
  p.lower = Eigen::VectorXd::Constant(2, -kInf);
  p.upper = Eigen::VectorXd::Constant(2, kInf);
  return p;
}

// min 1/2 (w - 2)^2  s.t.  w <= 1
inline NlpProblem bound_qp() {
  NlpProblem p;
  p.variables = 1;
  p.constraints = 0;
  p.objective = [](const Eigen::VectorXd& w) { return 0.5 * (w[0] - 2.0) * (w[0] - 2.0); };
  p.gradient = [](const Eigen::VectorXd& w) { return Eigen::VectorXd::Constant(1, w[0] - 2.0); };
  p.residuals = [](const Eigen::VectorXd&) { return Eigen::VectorXd(0); };
  p.jacobian = [](const Eigen::VectorXd&) { return SparseMatrix(0, 1); };
  p.hessian = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return dense_to_sparse(Eigen::MatrixXd::Identity(1, 1)); };
  p.lower = Eigen::VectorXd::Constant(1, -kInf);
  p.upper = Eigen::VectorXd::Constant(1, 1.0);
  return p;
}

inline double rosenbrock(double x, double y) { return (1.0 - x) * (1.0 - x) + 100.0 * (y - x * x) * (y - x * x); }

// Rosenbrock on the unit circle, exact Lagrangian Hessian.
inline NlpProblem circle_rosenbrock() {
  NlpProblem p;
  p.variables = 2;
  p.constraints = 1;
  p.objective = [](const Eigen::VectorXd& w) { return rosenbrock(w[0], w[1]); };
  p.gradient = [](const Eigen::VectorXd& w) {
    Eigen::VectorXd g(2);
    g << -2.0 * (1.0 - w[0]) - 400.0 * w[0] * (w[1] - w[0] * w[0]), 200.0 * (w[1] - w[0] * w[0]);
    return g;
  };
  p.residuals = [](const Eigen::VectorXd& w) { return Eigen::VectorXd::Constant(1, w.squaredNorm() - 1.0); };
  p.jacobian = [](const Eigen::VectorXd& w) { return dense_to_sparse(2.0 * w.transpose()); };
  p.hessian = [](const Eigen::VectorXd& w, const Eigen::VectorXd& y) {
    Eigen::MatrixXd h(2, 2);
    h << 2.0 - 400.0 * (w[1] - 3.0 * w[0] * w[0]) + 2.0 * y[0], -400.0 * w[0], -400.0 * w[0], 200.0 + 2.0 * y[0];
    return dense_to_sparse(h);
  };
  p.lower = Eigen::VectorXd::Constant(2, -kInf);
  p.upper = Eigen::VectorXd::Constant(2, kInf);
  return p;
}

// Independent oracle: theta on a dense grid, then Brent around the best node.
inline Eigen::VectorXd circle_oracle() {
  auto f = [](double t) { return rosenbrock(std::cos(t), std::sin(t)); };
  const int n = 20000;
  double best = 0.0, best_f = f(0.0);
  for (int i = 1; i < n; ++i) {
    const double t = 2.0 * M_PI * i / n;
    if (f(t) < best_f) best_f = f(t), best = t;
  }
  const double h = 2.0 * M_PI / n;
  const auto r = boost::math::tools::brent_find_minima(f, best - h, best + h, 52);
  Eigen::VectorXd w(2);
  w << std::cos(r.first), std::sin(r.first);
  return w;
}

}  // namespace ddocp::testing
