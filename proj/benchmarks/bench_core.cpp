#include <benchmark/benchmark.h>

#include "ddocp/kernel.hpp"
#include "ddocp/msr_model.hpp"
#include "ddocp/msr_scenario.hpp"
#include "ddocp/nlp.hpp"
#include "ddocp/simulator.hpp"
#include "ddocp/transcription.hpp"

using namespace ddocp;

namespace {

const msr::Params kP = msr::Params::table1();

Vector steady(double q) { return msr::steady_guess(kP, q); }

Transcription ramp(const msr::Model& m, int intervals) {
  Grid g;
  g.dt = 30.0;
  g.intervals = intervals;
  g.steps = 1;
  return Transcription(m, msr::ramp_spec(kP, SetpointProfile::ramp(1.0, 2.5, 0.0, 150.0), 0.0), g);
}

}  // namespace

static void BM_Laplace(benchmark::State& state) {
  const auto k = HagenPoiseuilleKernel::from_average_velocity(4.0, 0.01, {30.0, 0.3});
  const std::complex<double> s(0.3, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(k.laplace(s));
}
BENCHMARK(BM_Laplace);

static void BM_Residuals(benchmark::State& state) {
  const msr::Model m(kP);
  const Transcription tr = ramp(m, static_cast<int>(state.range(0)));
  const Vector w = tr.initial_guess(steady);
  for (auto _ : state) benchmark::DoNotOptimize(tr.residuals(w));
}
BENCHMARK(BM_Residuals)->Arg(40)->Arg(160);

static void BM_Jacobian(benchmark::State& state) {
  const msr::Model m(kP);
  const Transcription tr = ramp(m, static_cast<int>(state.range(0)));
  const Vector w = tr.initial_guess(steady);
  for (auto _ : state) benchmark::DoNotOptimize(tr.jacobian(w));
}
BENCHMARK(BM_Jacobian)->Arg(40)->Arg(160);

static void BM_Solve(benchmark::State& state) {
  const msr::Model m(kP);
  const Transcription tr = ramp(m, static_cast<int>(state.range(0)));
  const Vector w0 = tr.initial_guess(steady);
  const NlpProblem p = tr.problem();
  for (auto _ : state) benchmark::DoNotOptimize(solve(p, w0));
}
BENCHMARK(BM_Solve)->Arg(40)->Unit(benchmark::kMillisecond);

static void BM_SimulateTrue(benchmark::State& state) {
  const msr::Model m(kP);
  const Vector x0 = steady(1.0);
  Vector u = msr::reference_input(kP);
  u[msr::kRhoExt] += 10.0;
  const InputSchedule s({0.0}, {u});
  SimConfig cfg;
  cfg.step = 1e-3;
  cfg.kernel_points = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_true(m, x0, s, 0.0, 10.0, cfg));
  state.SetItemsProcessed(state.iterations() * 10000);  // RK4 steps
}
BENCHMARK(BM_SimulateTrue)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
