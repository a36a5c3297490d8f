#include "doctest.h"

#include <cmath>

#include "ddocp/errors.hpp"
#include "ddocp/msr_model.hpp"
#include "ddocp/msr_scenario.hpp"
#include "ddocp/simulator.hpp"

using namespace ddocp;
using doctest::Approx;

namespace {

const msr::Params kP = msr::Params::table1();

Vector one(double v) { return Vector::Constant(1, v); }

Trajectory shifted(const Trajectory& t, double dy) {
  Trajectory out = t;
  for (double& y : out.tracked) y += dy;
  return out;
}

Trajectory ramp(double t0, double t1, int n) {
  Trajectory t;
  for (int i = 0; i <= n; ++i) {
    const double s = t0 + (t1 - t0) * i / n;
    t.append(s, one(s), one(0.0), std::sin(s));
  }
  return t;
}

Vector step_input(double pcm) {
  Vector u = msr::reference_input(kP);
  u[msr::kRhoExt] += pcm;
  return u;
}

}  // namespace

TEST_CASE("input schedule") {
  const InputSchedule s({0.0, 10.0, 20.0}, {one(1.0), one(2.0), one(3.0)});
  CHECK(s.at(-1.0)[0] == 1.0);
  CHECK(s.at(9.999)[0] == 1.0);
  CHECK(s.at(10.0)[0] == 2.0);
  CHECK(s.at(25.0)[0] == 3.0);
  CHECK(s.segment(15.0) == 1);
  CHECK(InputSchedule::constant(one(4.0)).at(1e6)[0] == 4.0);
  CHECK_THROWS_AS(InputSchedule({0.0, 0.0}, {one(1.0), one(2.0)}), DomainError);
  CHECK_THROWS_AS(InputSchedule({0.0}, {one(1.0), one(2.0)}), DomainError);
}

TEST_CASE("Hermite history") {
  SUBCASE("reproduces a cubic") {
    History h(1);
    for (double t : {0.0, 1.0, 2.5, 3.0}) h.append(t, one(t * t * t - t), one(3 * t * t - 1), one(3 * t * t - 1));
    for (double t : {0.25, 1.7, 2.9}) CHECK(h(t)[0] == Approx(t * t * t - t).epsilon(1e-13));
    CHECK(h(-4.0)[0] == 0.0);
    std::size_t cursor = 0;
    double out = 0.0;
    CHECK_THROWS_AS(h.evaluate(3.5, cursor, &out), DomainError);
  }
  SUBCASE("keeps a kink at a node") {
    History h(1);
    h.append(0.0, one(1.0), one(-1.0), one(-1.0));
    h.append(1.0, one(0.0), one(-1.0), one(1.0));
    h.append(2.0, one(1.0), one(1.0), one(1.0));
    CHECK(h(0.5)[0] == Approx(0.5).epsilon(1e-15));
    CHECK(h(1.5)[0] == Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("discarding old nodes keeps recent values") {
    History h(1);
    for (int i = 0; i <= 10; ++i) h.append(i, one(2.0 * i), one(2.0), one(2.0));
    h.discard_before(5.5);
    CHECK(h.front_time() == 5.0);
    CHECK(h(7.25)[0] == Approx(14.5).epsilon(1e-15));
  }
}

TEST_CASE("steady state is preserved") {
  const msr::Model m(kP);
  const Vector x0 = msr::steady_guess(kP, 1.0);
  const InputSchedule u = InputSchedule::constant(msr::reference_input(kP));
  SimConfig cfg;
  cfg.step = 1e-2;
  cfg.sample_interval = 5.0;
  const Trajectory t = simulate_true(m, x0, u, 0.0, 100.0, cfg);
  CHECK(t.time.back() == Approx(100.0));
  double drift = 0.0;
  for (const Vector& x : t.states) drift = std::max(drift, ((x - x0).cwiseQuotient(x0.cwiseAbs())).lpNorm<Eigen::Infinity>());
  CHECK(drift < 1e-6);
  CHECK(t.warnings.empty());

  const Trajectory a = simulate_approx(m, x0, u, 0.0, 100.0, 1.0);
  double adrift = 0.0;
  for (const Vector& x : a.states) adrift = std::max(adrift, ((x - x0).cwiseQuotient(x0.cwiseAbs())).lpNorm<Eigen::Infinity>());
  CHECK(adrift < 1e-10);
}

TEST_CASE("reactivity step") {
  const msr::Model m(kP);
  const Vector x0 = msr::steady_guess(kP, 1.0);
  const InputSchedule u({0.0}, {step_input(10.0)});
  SimConfig cfg;
  cfg.step = 1e-3;
  cfg.sample_interval = 0.05;
  const Trajectory t = simulate_true(m, x0, u, 0.0, 1.0, cfg);
  // Prompt jump: power rises monotonically right after the step.
  for (int i = 1; i < t.size(); ++i) CHECK(t.tracked[i] > t.tracked[i - 1]);
  CHECK(t.tracked.back() > 1.01);
  const Trajectory a = simulate_approx(m, x0, u, 0.0, 1.0, 1e-3);
  CHECK(a.tracked.back() > 1.01);
}

TEST_CASE("causality") {
  const msr::Model m(kP);
  const Vector x0 = msr::steady_guess(kP, 1.0);
  SimConfig cfg;
  cfg.step = 1e-2;
  const InputSchedule early({0.0, 5.0}, {msr::reference_input(kP), step_input(10.0)});
  const InputSchedule late({0.0, 5.0, 12.0}, {msr::reference_input(kP), step_input(10.0), step_input(-40.0)});
  const Trajectory a = simulate_true(m, x0, early, 0.0, 12.0, cfg);
  const Trajectory b = simulate_true(m, x0, late, 0.0, 20.0, cfg);
  REQUIRE(a.size() <= b.size());
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.time[i] == b.time[i]);
    CHECK((a.states[i] - b.states[i]).lpNorm<Eigen::Infinity>() <= 1e-12 * a.states[i].lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("configuration errors") {
  const msr::Model m(kP);
  const Vector x0 = msr::steady_guess(kP, 1.0);
  const InputSchedule u = InputSchedule::constant(msr::reference_input(kP));
  SimConfig cfg;
  cfg.step = 2.0;  // the half-loop lags start at 1.875 s
  CHECK_THROWS_AS(simulate_true(m, x0, u, 0.0, 10.0, cfg), ConfigError);
  CHECK_THROWS_AS(simulate_approx(m, x0, u, 0.0, 10.0, 0.0), ConfigError);
  CHECK_THROWS_AS(simulate_approx(m, x0, u, 5.0, 5.0, 0.1), DomainError);
}

TEST_CASE("lag semantics agree for constant inputs") {
  const msr::Model m(kP);
  const Vector x0 = msr::steady_guess(kP, 1.0);
  const InputSchedule u({0.0}, {step_input(5.0)});
  SimConfig cfg;
  cfg.step = 1e-2;
  const Trajectory obs = simulate_true(m, x0, u, 0.0, 20.0, cfg);
  cfg.lags = LagSemantics::kEmission;
  const Trajectory emi = simulate_true(m, x0, u, 0.0, 20.0, cfg);
  REQUIRE(obs.size() == emi.size());
  for (int i = 0; i < obs.size(); ++i) CHECK(std::abs(obs.tracked[i] - emi.tracked[i]) < 1e-9);
}

TEST_CASE("kernel resolution matters less than the delay linearization") {
  const msr::Model m(kP);
  const Vector x0 = msr::steady_guess(kP, 1.0);
  Vector slow = msr::reference_input(kP);
  slow[msr::kPressureDrop] *= 0.5;
  const InputSchedule u({0.0, 5.0}, {msr::reference_input(kP), slow});
  SimConfig cfg;
  cfg.step = 1e-2;
  const Trajectory k30 = simulate_true(m, x0, u, 0.0, 60.0, cfg);
  cfg.kernel_points = 60;
  const Trajectory k60 = simulate_true(m, x0, u, 0.0, 60.0, cfg);
  // Transcription-sized steps; fine steps resolve the surrogate's unstable root.
  const Trajectory approx = simulate_approx(m, x0, u, 0.0, 60.0, 10.0);
  const double resolution = error_metrics(k60, k30).max_abs;
  const double model = error_metrics(k60, approx).max_abs;
  CHECK(resolution < model);
}

TEST_CASE("fine steps resolve the surrogate's unstable real root") {
  // The linearized surrogate has a real root near +1.4847 at 1 MW and 4 m/s;
  // the deviation from steady state grows at that rate once it dominates.
  const msr::Model m(kP);
  const Vector x0 = msr::steady_guess(kP, 1.0);
  const InputSchedule u({0.0}, {step_input(1e-3)});
  const double h = 1e-2;
  const Trajectory fine = simulate_approx(m, x0, u, 0.0, 9.0, h);
  auto dev = [&](double t) { return std::abs(fine.tracked[static_cast<int>(std::lround(t / h))] - 1.0); };
  const double rate = std::log(dev(9.0) / dev(8.0));
  CHECK(rate == Approx(-std::log(1.0 - 1.4847 * h) / h).epsilon(0.02));
}

TEST_CASE("error metrics") {
  const Trajectory a = ramp(0.0, 10.0, 100);
  const ErrorMetrics same = error_metrics(a, a);
  CHECK(same.max_abs == 0.0);
  CHECK(same.rms == 0.0);

  const ErrorMetrics off = error_metrics(shifted(a, 0.1), a);
  CHECK(off.max_abs == Approx(0.1).epsilon(1e-12));
  CHECK(off.rms == Approx(0.1).epsilon(1e-12));

  // Coarser grid drives the sampling.
  const ErrorMetrics mixed = error_metrics(ramp(0.0, 10.0, 10), a);
  CHECK(mixed.time.size() == 11);

  CHECK_THROWS_AS(error_metrics(ramp(0.0, 1.0, 5), ramp(2.0, 3.0, 5)), DomainError);
}
