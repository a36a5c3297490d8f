#include "doctest.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "ddocp/errors.hpp"
#include "ddocp/nlp.hpp"

#include "nlp_problems.hpp"

using namespace ddocp;
using namespace ddocp::testing;
using Eigen::VectorXd;
using doctest::Approx;

TEST_CASE("equality-constrained QP") {
  const auto p = equality_qp();
  const SolveResult r = solve(p, VectorXd::Zero(2));
  CHECK(r.report.status == SolveStatus::kConverged);
  CHECK(std::abs(r.w[0] - 1.0) < 1e-8);
  CHECK(std::abs(r.w[1] - 1.0) < 1e-8);
  CHECK(r.multipliers.equality[0] == Approx(-1.0).epsilon(1e-8));
  CHECK(r.report.residuals.max() <= 1e-6);
}

TEST_CASE("bound-constrained QP") {
  const auto p = bound_qp();
  const SolveResult r = solve(p, VectorXd::Constant(1, -3.0));
  CHECK(r.report.status == SolveStatus::kConverged);
  CHECK(std::abs(r.w[0] - 1.0) < 1e-6);
  CHECK(r.w[0] < 1.0);
  CHECK(r.multipliers.upper[0] == Approx(1.0).epsilon(1e-5));
  CHECK(r.multipliers.lower[0] == 0.0);
}

TEST_CASE("KKT residuals") {
  SUBCASE("vanish at the exact QP solutions") {
    Multipliers m{VectorXd::Constant(1, -1.0), VectorXd::Zero(2), VectorXd::Zero(2)};
    const KktResiduals e = kkt_residuals(equality_qp(), VectorXd::Ones(2), m);
    CHECK(e.max() < 1e-12);
    Multipliers mb{VectorXd(0), VectorXd::Zero(1), VectorXd::Ones(1)};
    CHECK(kkt_residuals(bound_qp(), VectorXd::Ones(1), mb).max() < 1e-12);
  }
  SUBCASE("feasibility is the max constraint violation") {
    Multipliers m{VectorXd::Zero(1), VectorXd::Zero(2), VectorXd::Zero(2)};
    VectorXd w(2);
    w << 3.0, 0.5;
    CHECK(kkt_residuals(equality_qp(), w, m).feasibility == Approx(1.5));
  }
  SUBCASE("invariant under reordering the constraints") {
    // c = (w1 + w2 - 2, w1 - w2), in both orders.
    auto make = [](bool swapped) {
      NlpProblem p = equality_qp();
      p.constraints = 2;
      p.residuals = [swapped](const VectorXd& w) {
        VectorXd c(2);
        c << w.sum() - 2.0, w[0] - w[1];
        if (swapped) std::swap(c[0], c[1]);
        return c;
      };
      p.jacobian = [swapped](const VectorXd&) {
        Eigen::MatrixXd j(2, 2);
        j << 1.0, 1.0, 1.0, -1.0;
        if (swapped) j.row(0).swap(j.row(1));
        return dense_to_sparse(j);
      };
      return p;
    };
    VectorXd w(2);
    w << 0.3, 1.9;
    VectorXd y(2);
    y << 0.7, -0.2;
    const KktResiduals a = kkt_residuals(make(false), w, {y, VectorXd::Zero(2), VectorXd::Zero(2)});
    const KktResiduals b = kkt_residuals(make(true), w, {y.reverse(), VectorXd::Zero(2), VectorXd::Zero(2)});
    CHECK(a.stationarity == b.stationarity);
    CHECK(a.feasibility == b.feasibility);
    CHECK(a.complementarity == b.complementarity);
  }
}

TEST_CASE("Rosenbrock on the unit circle") {
  const VectorXd oracle = circle_oracle();
  CHECK(std::abs(oracle.norm() - 1.0) < 1e-15);
  const auto p = circle_rosenbrock();
  VectorXd w0(2);
  w0 << 0.5, 0.5;
  const SolveResult r = solve(p, w0, SolverOptions{.tolerance = 1e-10});
  CHECK(r.report.status == SolveStatus::kConverged);
  CHECK((r.w - oracle).lpNorm<Eigen::Infinity>() < 1e-6);

  SUBCASE("deterministic") {
    const SolveResult again = solve(p, w0, SolverOptions{.tolerance = 1e-10});
    CHECK((again.w - r.w).norm() == 0.0);
    CHECK(again.report.iterations == r.report.iterations);
  }
  SUBCASE("without second-order correction") {
    SolverOptions opts;
    opts.tolerance = 1e-10;
    opts.second_order_correction = false;
    const SolveResult plain = solve(p, w0, opts);
    CHECK(plain.report.status == SolveStatus::kConverged);
    CHECK((plain.w - oracle).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("status reporting") {
  SUBCASE("iteration limit") {
    SolverOptions opts;
    opts.max_iterations = 1;
    VectorXd w0(2);
    w0 << -0.8, 0.5;
    const SolveResult r = solve(circle_rosenbrock(), w0, opts);
    CHECK(r.report.status == SolveStatus::kIterationLimit);
    CHECK(to_string(r.report.status) == "iteration-limit");
    CHECK(r.report.log.size() == 2);
  }
  SUBCASE("infeasible constraint w^2 + 1 = 0") {
    NlpProblem p;
    p.variables = 1;
    p.constraints = 1;
    p.objective = [](const VectorXd& w) { return 0.5 * w.squaredNorm(); };
    p.gradient = [](const VectorXd& w) { return w; };
    p.residuals = [](const VectorXd& w) { return VectorXd::Constant(1, w[0] * w[0] + 1.0); };
    p.jacobian = [](const VectorXd& w) { return dense_to_sparse(Eigen::MatrixXd::Constant(1, 1, 2.0 * w[0])); };
    p.hessian = [](const VectorXd&, const VectorXd& y) {
      return dense_to_sparse(Eigen::MatrixXd::Constant(1, 1, 1.0 + 2.0 * y[0]));
    };
    p.lower = VectorXd::Constant(1, -kInf);
    p.upper = VectorXd::Constant(1, kInf);
    const SolveResult r = solve(p, VectorXd::Constant(1, 0.7));
    CHECK(r.report.status != SolveStatus::kConverged);
    CHECK(r.report.residuals.feasibility >= 1.0);
  }
  SUBCASE("the iteration log has one row per record") {
    const SolveResult r = solve(equality_qp(), VectorXd::Zero(2));
    std::ostringstream log, csv;
    write_iteration_log(log, r.report);
    write_iteration_csv(csv, r.report);
    auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
    CHECK(lines(csv.str()) == static_cast<long>(r.report.log.size()) + 1);
    CHECK(lines(log.str()) >= static_cast<long>(r.report.log.size()));
  }
}

TEST_CASE("problem validation") {
  NlpProblem p = bound_qp();
  p.lower[0] = 2.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  NlpProblem q = equality_qp();
  q.gradient = nullptr;
  CHECK_THROWS_AS(q.validate(), DomainError);
  NlpProblem s = equality_qp();
  s.upper = VectorXd::Constant(3, 1.0);
  CHECK_THROWS_AS(s.validate(), DomainError);
}
