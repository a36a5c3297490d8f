#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "ddocp/cli/commands.hpp"
#include "ddocp/errors.hpp"

namespace ddocp::cli {

namespace fs = std::filesystem;

int run(int argc, const char* const* argv) {
  CLI::App app{"Optimal control of a molten-salt reactor with distributed time delays", "ddocp"};
  std::string config_path;
  std::string out_dir;
  std::string log_level = "info";
  std::string inputs_path;
  bool print_schema = false;
  app.add_option("--config", config_path, "Scenario JSON (defaults apply when omitted)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory, overrides output.directory");
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
  app.add_flag("--print-schema", print_schema, "Print the configuration schema and exit");
  app.require_subcommand(0, 1);
  app.fallthrough();
  app.add_subcommand("steady", "Steady state at the operating point");
  app.add_subcommand("solve", "Solve the ramping OCP");
  auto* compare = app.add_subcommand("compare", "Simulate the optimal inputs on the true and approximate systems");
  compare->add_option("--inputs", inputs_path, "inputs.csv of a previous solve (default: solve inline)")
      ->check(CLI::ExistingFile);
  app.add_subcommand("kernel", "Loop kernel, its moments and the K-point discretization");
  app.add_subcommand("stability", "Characteristic-function scans at the operating point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  auto logger = spdlog::get("ddocp");
  if (!logger) logger = spdlog::stderr_color_st("ddocp");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_pattern("[%l] %v");

  if (print_schema) {
    std::cout << config_schema();
    return kExitOk;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    ScenarioConfig config = config_path.empty() ? parse_config("{}") : load_config(config_path);
    const fs::path out = out_dir.empty() ? config.output_directory : fs::path(out_dir);
    if (command == "steady") return cmd_steady(config, out);
    if (command == "solve") return cmd_solve(config, out);
    if (command == "compare") {
      return cmd_compare(config, out, inputs_path.empty() ? std::nullopt : std::optional<fs::path>(inputs_path));
    }
    if (command == "kernel") return cmd_kernel(config, out);
    return cmd_stability(config, out);
  } catch (const ConfigFailure& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const DomainError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const SolverError& e) {
    spdlog::error("solver failure: {}", e.what());
    return kExitSolver;
  } catch (const NumericError& e) {
    spdlog::error("simulation failure: {}", e.what());
    return kExitSimulation;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitSimulation;
  }
}

}  // namespace ddocp::cli
