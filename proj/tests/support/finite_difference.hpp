#pragma once

// Central finite differences and random test points shared by the suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Core>

namespace ddocp::testing {

/// Central-difference Jacobian with step h * max(1, |x_j|).
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                                   const Eigen::VectorXd& x, double h = 1e-6) {
  const Eigen::VectorXd f0 = fn(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = h * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + step;
    xm[j] = x[j] - step;
    jac.col(j) = (fn(xp) - fn(xm)) / (2.0 * step);
    xp[j] = xm[j] = x[j];
  }
  return jac;
}

inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& fn,
                                   const Eigen::VectorXd& x, double h = 1e-6) {
  return fd_jacobian([&](const Eigen::VectorXd& v) { return Eigen::VectorXd::Constant(1, fn(v)); }, x, h)
      .row(0)
      .transpose();
}

/// max |a - b| / max(1, |b|) entrywise.
inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return ((a - b).array().abs() / b.array().abs().max(1.0)).maxCoeff();
}

/// Scale-aware relative error: |a - b| / max(|b|_inf, floor).
inline double normwise_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor = 1e-12) {
  return (a - b).lpNorm<Eigen::Infinity>() / std::max(b.lpNorm<Eigen::Infinity>(), floor);
}

class Sampler {
 public:
  explicit Sampler(unsigned seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  /// x * (1 + spread * U(-1, 1)) entrywise.
  Eigen::VectorXd perturb(const Eigen::VectorXd& x, double spread) {
    Eigen::VectorXd y = x;
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] *= 1.0 + uniform(-spread, spread);
    return y;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace ddocp::testing
