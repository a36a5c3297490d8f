#include "ddocp/cli/commands.hpp"

#include <cmath>
#include <future>
#include <iostream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "json.hpp"

#include "ddocp/delay_approx.hpp"
#include "ddocp/errors.hpp"

namespace ddocp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

msr::SteadyState configured_steady_state(const ScenarioConfig& c) {
  if (!(c.power > 0.0)) throw ConfigFailure("/operating_point/power: positive power required");
  return msr::steady_state(c.power, c.pressure_drop(), c.external_reactivity_pcm, c.params);
}

Trajectory nlp_trajectory(const Transcription& tr, const Vector& w, const msr::Params& p) {
  const Grid& g = tr.grid();
  Trajectory traj;
  const Vector& x0 = tr.spec().initial_state;
  traj.append(g.t0, x0, tr.spec().reference_input, msr::thermal_power(x0, p));
  for (int k = 0; k < g.intervals; ++k) {
    const Vector u = tr.input_at(w, k);
    for (int n = 1; n <= g.steps; ++n) {
      const Vector x = tr.state_at(w, k, n);
      traj.append(g.time(k, n), x, u, msr::thermal_power(x, p));
    }
  }
  return traj;
}

CsvTable schedule_table(const InputSchedule& s, const msr::Params& p) {
  CsvTable t;
  t.header = {"t", "rho_ext_pcm", "dP_Pa", "v_avg_mps"};
  for (int j = 0; j < s.size(); ++j) {
    const Vector& u = s.values()[j];
    t.add({s.times()[j], u[msr::kRhoExt], u[msr::kPressureDrop],
           msr::average_velocity(u[msr::kPressureDrop], p)});
  }
  return t;
}

json report_json(const SolveReport& r) {
  return {{"status", to_string(r.status)},
          {"iterations", r.iterations},
          {"objective", r.objective},
          {"stationarity", r.residuals.stationarity},
          {"feasibility", r.residuals.feasibility},
          {"complementarity", r.residuals.complementarity},
          {"wall_time_s", r.wall_time},
          {"message", r.message}};
}

void write_solve_bundle(const ScenarioConfig& c, const SolveOutcome& s, const fs::path& out) {
  write_csv(out / "inputs.csv", schedule_table(s.inputs, c.params));
  write_csv(out / "nlp_trajectory.csv", trajectory_table(s.trajectory, c.params));
  std::ostringstream log;
  write_iteration_log(log, s.result.report);
  write_text_atomic(out / "iterations.log", log.str());
  if (c.csv_log) {
    std::ostringstream csv;
    write_iteration_csv(csv, s.result.report);
    write_text_atomic(out / "iterations.csv", csv.str());
  }
  json report = report_json(s.result.report);
  const Vector& x_end = s.trajectory.states.back();
  report["terminal_time_s"] = s.trajectory.time.back();
  report["terminal_power_MW"] = msr::thermal_power(x_end, c.params);
  report["terminal_setpoint_MW"] = s.spec.setpoint.at(s.trajectory.time.back());
  write_text_atomic(out / "report.json", report.dump(2) + "\n");
}

CsvTable columns_of(const Trajectory& traj, const msr::Params& p, const std::vector<std::string>& names) {
  const CsvTable full = trajectory_table(traj, p);
  CsvTable t;
  t.header = names;
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(full.column(n));
  for (const auto& row : full.rows) {
    std::vector<double> r;
    for (std::size_t i : idx) r.push_back(row[i]);
    t.add(std::move(r));
  }
  return t;
}

void print_solve_summary(const SolveReport& r) {
  std::cout << "status " << to_string(r.status) << ", " << r.iterations << " iterations, objective "
            << r.objective << ", kkt " << r.residuals.max() << ", " << r.wall_time << " s\n";
}

}  // namespace

SolveOutcome solve_scenario(const ScenarioConfig& c) {
  const msr::Model model(c.params);
  OcpSpec spec = c.ocp_spec();
  Transcription tr(model, spec, c.grid);
  msr::ScenarioDefaults d;
  d.reference_velocity = c.average_velocity;
  d.reference_reactivity_pcm = c.external_reactivity_pcm;
  const Vector w0 = tr.initial_guess([&](double q) { return msr::steady_guess(c.params, q, d); });
  spdlog::info("solving: {} intervals x {} steps, {} variables", c.grid.intervals, c.grid.steps, w0.size());

  SolveResult result = solve(tr.problem(), w0, c.solver);
  std::vector<double> times;
  std::vector<Vector> values;
  for (int k = 0; k < c.grid.intervals; ++k) {
    times.push_back(c.grid.interval_start(k));
    values.push_back(tr.input_at(result.w, k));
  }
  InputSchedule inputs(std::move(times), std::move(values));
  Trajectory traj = nlp_trajectory(tr, result.w, c.params);
  return {std::move(result), std::move(spec), std::move(inputs), std::move(traj)};
}

CompareOutcome compare_scenario(const ScenarioConfig& c, const Vector& x0, const InputSchedule& inputs) {
  const msr::Model model(c.params);
  const double t0 = c.grid.t0;
  const double t1 = t0 + c.simulation_horizon();
  auto truth = std::async(std::launch::async, [&] { return simulate_true(model, x0, inputs, t0, t1, c.simulation); });
  Trajectory approx = simulate_approx(model, x0, inputs, t0, t1, c.approx_simulation_step());
  CompareOutcome out{truth.get(), std::move(approx), {}};
  out.metrics = error_metrics(out.truth, out.approx);
  return out;
}

InputSchedule read_input_schedule(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t ct = t.column("t"), cr = t.column("rho_ext_pcm"), cp = t.column("dP_Pa");
  if (t.rows.empty()) throw ConfigFailure(path.string() + ": no input rows");
  std::vector<double> times;
  std::vector<Vector> values;
  for (const auto& row : t.rows) {
    times.push_back(row[ct]);
    Vector u(msr::kInputs);
    u << row[cr], row[cp];
    values.push_back(u);
  }
  try {
    return InputSchedule(std::move(times), std::move(values));
  } catch (const DomainError& e) {
    throw ConfigFailure(path.string() + ": " + e.what());
  }
}

int cmd_steady(const ScenarioConfig& c, const fs::path& out) {
  const msr::SteadyState s = configured_steady_state(c);
  const Vector x = s.state.to_vector();
  CsvTable t;
  t.header = {"Q_g_MW", "dP_Pa", "v_avg_mps"};
  for (const auto& n : msr::state_names()) t.header.push_back(n);
  t.header.insert(t.header.end(), {"rho_ext_pcm", "total_reactivity", "F_m3ps", "D_1ps", "gamma_f_s",
                                   "gamma_h_s", "residual"});
  std::vector<double> row{c.power, s.inputs.pressure_drop, c.average_velocity};
  row.insert(row.end(), x.data(), x.data() + x.size());
  row.insert(row.end(), {s.inputs.external_reactivity_pcm, s.total_reactivity, s.flow_rate, s.dilution_rate,
                         s.full_loop_lag, s.half_loop_lag, s.residual});
  t.add(row);
  write_csv(out / "steady.csv", t);

  std::cout.precision(10);
  for (std::size_t i = 0; i < t.header.size(); ++i) std::cout << t.header[i] << " = " << row[i] << "\n";
  return kExitOk;
}

int cmd_solve(const ScenarioConfig& c, const fs::path& out) {
  const SolveOutcome s = solve_scenario(c);
  write_solve_bundle(c, s, out);
  print_solve_summary(s.result.report);
  if (s.result.report.status != SolveStatus::kConverged) {
    spdlog::error("solver failed: {}", s.result.report.message);
    return kExitSolver;
  }
  return kExitOk;
}

int cmd_compare(const ScenarioConfig& c, const fs::path& out, const std::optional<fs::path>& inputs) {
  const OcpSpec spec = c.ocp_spec();
  std::optional<InputSchedule> schedule;
  if (inputs) {
    schedule = read_input_schedule(*inputs);
  } else {
    const SolveOutcome s = solve_scenario(c);
    write_solve_bundle(c, s, out);
    print_solve_summary(s.result.report);
    if (s.result.report.status != SolveStatus::kConverged) {
      spdlog::error("solver failed: {}", s.result.report.message);
      return kExitSolver;
    }
    schedule = s.inputs;
  }

  spdlog::info("simulating {} s: true system (h = {}, K = {}) and approximate system (h = {})",
               c.simulation_horizon(), c.simulation.step, c.simulation.kernel_points, c.approx_simulation_step());
  const CompareOutcome r = compare_scenario(c, spec.initial_state, *schedule);
  for (const auto& w : r.truth.warnings) spdlog::warn("{}", w);

  write_csv(out / "true_trajectory.csv", trajectory_table(r.truth, c.params));
  write_csv(out / "approx_trajectory.csv", trajectory_table(r.approx, c.params));
  CsvTable err;
  err.header = {"t", "dQ_g_MW"};
  for (std::size_t j = 0; j < r.metrics.time.size(); ++j) err.add({r.metrics.time[j], r.metrics.difference[j]});
  write_csv(out / "error.csv", err);
  write_csv(out / "comparison.csv",
            columns_of(r.truth, c.params, {"t", "Q_g_MW", "T_r", "rho_th", "T_hx", "rho_ext_pcm", "v_avg_mps"}));
  write_csv(out / "precursors.csv", columns_of(r.truth, c.params, {"t", "C_1", "C_2", "C_3", "C_4", "C_5", "C_6"}));
  const json metrics = {{"max_abs_dQ_g_MW", r.metrics.max_abs},
                        {"rms_dQ_g_MW", r.metrics.rms},
                        {"time_of_max_s", r.metrics.time_of_max},
                        {"final_v_avg_mps", msr::average_velocity(schedule->values().back()[msr::kPressureDrop], c.params)},
                        {"warnings", r.truth.warnings}};
  write_text_atomic(out / "metrics.json", metrics.dump(2) + "\n");
  std::cout << "max |dQ_g| = " << r.metrics.max_abs << " MW at t = " << r.metrics.time_of_max
            << " s, rms = " << r.metrics.rms << " MW\n";
  return kExitOk;
}

int cmd_kernel(const ScenarioConfig& c, const fs::path& out) {
  const HagenPoiseuilleKernel full = msr::loop_kernel(c.pressure_drop(), c.params);
  const HagenPoiseuilleKernel half = full.half_loop();
  const DiscretizedKernel disc = discretize_hagen_poiseuille(full, c.kernel_points);

  CsvTable samples;
  samples.header = {"tau_s", "alpha_1ps", "cdf"};
  const double span = c.max_lag_factor * full.min_lag();
  for (int i = 0; i < c.kernel_samples; ++i) {
    const double tau = span * i / (c.kernel_samples - 1);
    samples.add({tau, full.density(tau), full.cdf(tau)});
  }
  write_csv(out / "kernel.csv", samples);

  CsvTable points;
  points.header = {"k", "tau_k_s", "w_k"};
  double sum = 0.0;
  for (std::size_t k = 0; k < disc.size(); ++k) {
    points.add({static_cast<double>(k + 1), disc.lags[k], disc.weights[k]});
    sum += disc.weights[k];
  }
  write_csv(out / "kernel_discrete.csv", points);

  CsvTable summary;
  summary.header = {"dP_Pa", "v_avg_mps", "viscosity_Pa_s", "tau0_s", "gamma_s", "F_m3ps",
                    "half_tau0_s", "half_gamma_s", "K", "weight_sum", "discrete_mean_lag_s"};
  summary.add({full.pressure_drop(), full.average_velocity(), full.viscosity(), full.min_lag(), full.mean_lag(),
               full.flow_rate(), half.min_lag(), half.mean_lag(), static_cast<double>(disc.size()), sum,
               disc.mean_lag()});
  write_csv(out / "kernel_summary.csv", summary);

  std::cout.precision(10);
  std::cout << "tau0 = " << full.min_lag() << " s\ngamma = " << full.mean_lag() << " s\nF = " << full.flow_rate()
            << " m^3/s\nsum w_k = " << sum << " (K = " << disc.size() << ")\n";
  if (std::abs(sum - 1.0) > 1e-12) {
    spdlog::error("discrete kernel weights sum to {}, not 1", sum);
    return kExitSimulation;
  }
  return kExitOk;
}

int cmd_stability(const ScenarioConfig& c, const fs::path& out) {
  const msr::SteadyState s = configured_steady_state(c);
  const msr::Model model(c.params);
  const Vector xs = s.state.to_vector();
  const Vector us = s.inputs.to_vector();
  const LinearizedSystem sys = linearize(model, xs, us);

  for (const std::string& variant : c.stability_variants) {
    ScanRegion region = c.region;
    CharacteristicFunction fn;
    if (variant == "approx") {
      fn = [&](Complex l) { return characteristic_approx(sys, l); };
    } else if (variant == "dde") {
      // The power-law kernel transform only exists on Re s >= 0.
      if (region.re_max <= 0.0) {
        spdlog::warn("skipping dde variant: its characteristic function needs Re s >= 0");
        continue;
      }
      region.re_min = std::max(region.re_min, 0.0);
      fn = [&](Complex l) { return characteristic_dde(sys, l); };
    } else {
      const LinearizedSystem disc = sys.with_kernels(model.discretized_kernels(us, c.kernel_points));
      fn = [disc](Complex l) { return characteristic(disc, l, CharacteristicKind::kDelay); };
    }
    spdlog::info("scanning {} on [{}, {}] x [{}, {}]i", variant, region.re_min, region.re_max, region.im_min,
                 region.im_max);
    const ScanResult r = root_scan(fn, region, c.scan);
    for (const auto& d : r.diagnostics) spdlog::debug("{}: {}", variant, d);

    CsvTable samples;
    samples.header = {"re", "im", "abs_det", "normalized_residual"};
    for (const auto& smp : r.samples) {
      samples.add({smp.lambda.real(), smp.lambda.imag(), std::abs(smp.det_value), smp.normalized_residual()});
    }
    write_csv(out / ("stability_" + variant + "_samples.csv"), samples);
    CsvTable roots;
    roots.header = {"re", "im", "normalized_residual", "iterations"};
    for (const auto& root : r.roots) {
      roots.add({root.lambda.real(), root.lambda.imag(), root.normalized_residual,
                 static_cast<double>(root.iterations)});
    }
    write_csv(out / ("stability_" + variant + "_roots.csv"), roots);

    std::cout << variant << ": " << r.roots.size() << " roots";
    if (!r.roots.empty()) std::cout << ", rightmost " << r.roots.front().lambda;
    std::cout << "\n";
  }
  return kExitOk;
}

}  // namespace ddocp::cli
