#pragma once

/// \file config.hpp
/// Scenario configuration of the command-line tool: JSON, validated against
/// docs/config.schema.json, then mapped onto the library types.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ddocp/delay_approx.hpp"
#include "ddocp/msr_model.hpp"
#include "ddocp/msr_scenario.hpp"
#include "ddocp/nlp.hpp"
#include "ddocp/simulator.hpp"
#include "ddocp/transcription.hpp"

namespace ddocp::cli {

/// Parse error, schema violation or inconsistent values.  The message
/// names the offending location (line/column or JSON pointer).
class ConfigFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Bounds {
  double lower;
  double upper;
};

struct ScenarioConfig {
  msr::Params params = msr::Params::table1();
  int kernel_points = 30;
  int kernel_samples = 200;
  double max_lag_factor = 10.0;

  double power = 1.0;  // [MW]
  double average_velocity = 4.0;
  double external_reactivity_pcm = 50.0;

  Grid grid;

  double tracking_weight = 1.0;
  double reactivity_move_weight = 1e-2;
  double pressure_move_weight = 1e2;
  SetpointProfile setpoint;  // empty: constant at `power`
  Bounds velocity_bounds{0.5, 12.0};
  Bounds reactivity_bounds{-1000.0, 1000.0};
  Bounds temperature_bounds{600.0, 1000.0};
  Bounds thermal_reactivity_bounds{-0.05, 0.05};

  SolverOptions solver;
  bool csv_log = true;

  SimConfig simulation;
  double horizon = 0.0;      // 0: grid final time
  double approx_step = 0.0;  // 0: grid step

  std::vector<std::string> stability_variants{"dde", "approx", "discretized"};
  ScanRegion region;
  ScanOptions scan;

  std::filesystem::path output_directory = "out";

  /// Setpoint with the constant default filled in.
  SetpointProfile effective_setpoint() const;
  double pressure_drop() const;
  double simulation_horizon() const;
  double approx_simulation_step() const;
  /// OCP with the configured weights and bounds; crossed bounds and other
  /// inconsistencies raise ConfigFailure.
  OcpSpec ocp_spec() const;
};

/// The schema shipped in docs/, compiled into the binary.
std::string_view config_schema();

/// `source` names the text in diagnostics.
ScenarioConfig parse_config(const std::string& text, const std::string& source = "<config>");
ScenarioConfig load_config(const std::filesystem::path& path);

}  // namespace ddocp::cli
