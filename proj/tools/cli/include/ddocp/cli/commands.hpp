#pragma once

/// \file commands.hpp
/// Subcommands of the `ddocp` tool.  Each cmd_* writes its CSV bundle into
/// `out` and returns a process exit code; the *_scenario functions run the
/// same pipelines without touching the file system.

#include <filesystem>
#include <memory>
#include <optional>

#include "ddocp/cli/config.hpp"
#include "ddocp/cli/csv.hpp"

namespace ddocp::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitSolver = 3,
  kExitSimulation = 4,
};

struct SolveOutcome {
  SolveResult result;
  OcpSpec spec;
  InputSchedule inputs;   // u_k from the interval starts
  Trajectory trajectory;  // NLP states at every grid point, t0 included
};

/// Transcribes and solves the configured OCP.  ConfigFailure on invalid
/// settings; a failed solve is reported in result.report.
SolveOutcome solve_scenario(const ScenarioConfig& config);

struct CompareOutcome {
  Trajectory truth;
  Trajectory approx;
  ErrorMetrics metrics;
};

/// Simulates `inputs` with the true (K-point) and the approximate system
/// from `x0` (both runs in parallel).
CompareOutcome compare_scenario(const ScenarioConfig& config, const Vector& x0, const InputSchedule& inputs);

/// Reads a schedule written by `solve` (columns t, rho_ext_pcm, dP_Pa).
InputSchedule read_input_schedule(const std::filesystem::path& path);

int cmd_steady(const ScenarioConfig& config, const std::filesystem::path& out);
int cmd_solve(const ScenarioConfig& config, const std::filesystem::path& out);
/// Solves inline unless `inputs` names a schedule from a previous solve.
int cmd_compare(const ScenarioConfig& config, const std::filesystem::path& out,
                const std::optional<std::filesystem::path>& inputs = std::nullopt);
int cmd_kernel(const ScenarioConfig& config, const std::filesystem::path& out);
int cmd_stability(const ScenarioConfig& config, const std::filesystem::path& out);

/// Full command line: parses arguments, loads the config, dispatches and
/// maps exceptions onto exit codes.
int run(int argc, const char* const* argv);

}  // namespace ddocp::cli
